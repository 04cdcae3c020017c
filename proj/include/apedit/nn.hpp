#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "apedit/autograd.hpp"
#include "apedit/rng.hpp"

namespace apedit {

// Owns every trainable array exactly once; the traversal order is the
// creation order, which optimizer and checkpoint code rely on.
class ParamRegistry {
 public:
  Parameter& create(const std::string& name, std::vector<int> shape);
  Parameter& find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  int64_t total_elements() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> index_;
};

// scaled uniform: +-sqrt(6 / (fan_in + fan_out))
void init_uniform(Parameter& p, int fan_in, int fan_out, Rng& rng);

struct AdamConfig {
  double base_lr = 0.05;
  int warmup_steps = 400;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Adam with the inverse-square-root warmup schedule:
// lr(t) = base * min(t^-0.5, t * warmup^-1.5)
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // Applies one update to the given subset; the step counter is global.
  void step(const std::vector<Parameter*>& params);
  double lr_at(long long step) const;
  long long steps_taken() const { return step_; }

 private:
  AdamConfig cfg_;
  long long step_ = 0;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool pass = false;
  std::string worst_param;
  double worst_error = 0.0;
};

// Central finite differences (eps 1e-5) against reverse-mode gradients.
// loss_fn evaluates the loss without touching gradients; backward_fn zeroes
// grads and runs one forward+backward pass.
GradCheckReport grad_check(ParamRegistry& registry,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           double tolerance, int max_elems_per_param = 0);

// Text checkpoint: every registered parameter by name and shape. Loading
// fails loudly on any name or shape mismatch. Extra lines prefixed '#' at
// the top carry the serialized config.
void save_params(const std::string& path, const ParamRegistry& registry,
                 const std::vector<std::string>& header_lines = {});
std::vector<std::string> load_params(const std::string& path,
                                     ParamRegistry& registry);

}  // namespace apedit
