#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apedit/corpus.hpp"
#include "apedit/editalign.hpp"
#include "apedit/nn.hpp"

namespace apedit {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_len = 64;   // wrapped sequence length limit
  int k_max = 4;      // tag alphabet is {-1, 0, 1, ..., k_max}
  uint64_t init_seed = 1;

  int n_tag_classes() const { return k_max + 2; }
};

struct QePrediction {
  QeTagSequence tags;
  Tensor tag_logits;  // (|m|+1, k_max+2); row 0 is the sentinel slot
  Hter hter;
};

enum class SourceModel { AOM, GM };

struct ApeOutput {
  Sentence tokens;
  SourceModel source_model = SourceModel::AOM;
  int iterations_used = 0;
  bool truncated = false;        // GM hit its length bound before EOS
  bool reached_fixpoint = false; // AOM pass left the sentence unchanged
};

// Supervision for one atomic-operation training example: the placeholder
// skeleton plus per-position fill targets (-1 where unsupervised). When the
// oracle tags exceed k_max the skeleton is rebuilt with clipped insertion
// runs, so |skeleton| may fall short of |pe|.
struct AomExample {
  Sentence skeleton;
  std::vector<int> targets;
  QeTagSequence clipped_tags;
  int clipped_positions = 0;
};

AomExample build_aom_example(const Sentence& mt, const Sentence& pe, int k_max);

// rate-masked copy of target using [PLH]; supervise marks the masked slots
std::pair<Sentence, std::vector<char>> pretrain_mask(const Sentence& target,
                                                     double rate, Rng& rng);

struct BatchEncoding {
  Tensor out;                           // (batch, max_len_in_batch, d_model)
  std::vector<std::vector<char>> mask;  // 1 at real positions, 0 at PAD
};

// Shared encoder + memory encoder with QE, atomic-editing and generative
// heads. The two encoder stacks are physically shared across all three
// tasks; only the output heads differ.
class ApeModel {
 public:
  explicit ApeModel(const ModelConfig& cfg);
  ApeModel(const ApeModel&) = delete;
  ApeModel& operator=(const ApeModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

  std::vector<Parameter*> group_all();
  std::vector<Parameter*> group_joint();     // enc + memenc + emb + both tag heads
  std::vector<Parameter*> group_pretrain();  // enc + memenc + emb + PE head

  // --- task surface (read-only on parameters) ---
  QePrediction qe_forward(const Sentence& src, const Sentence& mt);
  Tensor aom_logits(const Sentence& src, const Sentence& m_tilde);
  Sentence aom_fill(const Sentence& src, const Sentence& m_tilde);
  Sentence gm_decode(const Sentence& src, const Sentence& mt, int max_len,
                     bool* truncated = nullptr);

  // --- losses (gradients accumulate into the registry on backward) ---
  Var joint_qe_aom_loss(Tape& tape, const Sentence& src, const Sentence& mt,
                        const Sentence& pe, int* clipped = nullptr);
  Var gm_loss(Tape& tape, const Sentence& src, const Sentence& mt,
              const Sentence& pe);
  // the conditional masked-LM objective; also the PE half of the joint loss
  Var masked_fill_loss(Tape& tape, const Sentence& src, const Sentence& m_tilde,
                       const std::vector<int>& targets);

  double teacher_forced_accuracy(const Sentence& src, const Sentence& mt,
                                 const Sentence& pe);

  // --- padded batch views used by shape-law checks and parallel eval ---
  BatchEncoding encode_batch(const std::vector<Sentence>& srcs);
  BatchEncoding memory_encode_batch(const std::vector<Sentence>& mts,
                                    const std::vector<Sentence>& srcs);
  // (batch, prefix_len, vocab); prefixes must start with BOS
  Tensor decode_logits_batch(const std::vector<Sentence>& prefixes,
                             const std::vector<Sentence>& mts,
                             const std::vector<Sentence>& srcs,
                             bool use_src_shortcut = true);

  Sentence wrap(const Sentence& s) const;  // [BOS] + s + [EOS], length-checked

  // per-sequence forward pieces, public for the ablation/causality tests
  Var encode_seq(Tape& tape, const Sentence& wrapped);
  Var memory_encode_seq(Tape& tape, const Sentence& wrapped_mt, Var src_mem);
  Var decode_seq(Tape& tape, const Sentence& prefix, Var joint_mem, Var src_mem,
                 bool use_src_shortcut = true);

 private:
  Var self_attention_block(Tape& tape, Var x, const std::string& prefix,
                           bool causal);
  Var cross_attention_block(Tape& tape, Var x, Var mem,
                            const std::string& prefix);
  Var ffn_block(Tape& tape, Var x, const std::string& prefix);
  Var final_norm(Tape& tape, Var x, const std::string& prefix);
  Var head(Tape& tape, Var x, const std::string& name);

  ModelConfig cfg_;
  ParamRegistry params_;
};

}  // namespace apedit
