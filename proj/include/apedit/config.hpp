#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apedit/model.hpp"

namespace apedit {

// Every knob of the pipeline, serialized with every checkpoint. Flat
// dotted-key text format: one "section.key = value" per line, '#' comments.
struct Config {
  // model
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_len = 64;
  int k_max = 4;

  // data / generation
  int vocab_size = 48;
  int gen_train = 5000;
  int gen_dev = 500;
  int gen_test = 500;
  int len_min = 4;
  int len_max = 10;
  double p_delete = 0.07;
  double p_substitute = 0.10;
  double p_insert = 0.05;
  double p_swap = 0.02;
  int oversample = 20;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string vocab_path;

  // training
  double base_lr = 0.05;
  int warmup_steps = 400;
  int max_steps = 16000;
  int batch_tokens = 512;  // gradient-accumulation budget per optimizer step
  int pretrain_steps = 2000;
  double mask_rate = 0.2;
  double beta = 0.5;
  bool augment = true;
  int eval_every = 2000;
  int patience = 0;  // 0 disables dev-TER early stopping
  double dropout = 0.0;

  // inference
  double tau = 0.3;
  int refine_steps = 5;  // S

  uint64_t seed = 1;

  ModelConfig model_config() const;

  std::vector<std::string> serialize() const;
  void set(const std::string& key, const std::string& value);  // throws on unknown key

  static Config from_lines(const std::vector<std::string>& lines);
  static Config load(const std::string& path);
  void save(const std::string& path) const;
};

// "key=value" strings applied on top of a config
void apply_overrides(Config& cfg, const std::vector<std::string>& overrides);

}  // namespace apedit
