#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "apedit/rng.hpp"
#include "apedit/tensor.hpp"

namespace apedit {

// A trainable array with its gradient buffer and Adam moments. Owned by a
// ParamRegistry; tapes reference it by pointer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  uint64_t version = 0;  // bumped on every optimizer update
};

struct Node {
  Tensor val;
  Tensor grad;
  bool needs_grad = false;
};

using Var = std::shared_ptr<Node>;

// Reverse-accumulation tape over per-sequence 2D tensors. One tape per loss
// evaluation; backward() runs the recorded closures in reverse and folds
// leaf gradients into their parameters.
class Tape {
 public:
  explicit Tape(bool record_grad = true) : record_(record_grad) {}

  Var constant(Tensor v);
  Var leaf(Parameter& p);

  // y = x * W + b ; x:(T,in) W:(in,out) b:(out)
  Var linear(Var x, Var w, Var b);
  Var add(Var a, Var b);
  Var relu(Var x);
  // per-row normalization with learned gain/bias
  Var layer_norm(Var x, Var gain, Var bias);
  // fused multi-head attention over projected q,k,v; q:(Tq,d) k,v:(Tk,d)
  Var attention(Var q, Var k, Var v, int n_heads, bool causal);
  // out[t] = tok_table[ids[t]] + pos_table[t]
  Var embed(Var tok_table, Var pos_table, const std::vector<int>& ids);
  // mean cross entropy over positions with supervise[t] != 0; scalar output.
  // Throws if no position is supervised.
  Var cross_entropy(Var logits, const std::vector<int>& targets,
                    const std::vector<char>& supervise);
  Var add_scalars(Var a, Var b);

  // inverted dropout; identity until enable_dropout() arms the tape.
  // Inference tapes never arm it, so eval stays deterministic.
  Var dropout(Var x);
  void enable_dropout(double rate, Rng* rng);

  void backward(Var loss);

 private:
  Var make(Tensor v, bool needs_grad);
  void push(std::function<void()> op) {
    if (record_) ops_.push_back(std::move(op));
  }

  bool record_;
  double dropout_rate_ = 0.0;
  Rng* dropout_rng_ = nullptr;
  std::vector<std::function<void()>> ops_;
  std::vector<std::pair<Var, Parameter*>> leaves_;
};

// Row-wise softmax of a plain tensor (inference helpers).
Tensor softmax_rows(const Tensor& logits);
int argmax_row(const Tensor& t, int row);

}  // namespace apedit
