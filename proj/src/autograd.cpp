#include "apedit/autograd.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace apedit {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

Map map(Tensor& t) { return Map(t.data.data(), t.rows(), t.cols()); }
CMap cmap(const Tensor& t) { return CMap(t.data.data(), t.rows(), t.cols()); }

constexpr double kLnEps = 1e-5;

}  // namespace

Var Tape::make(Tensor v, bool needs_grad) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  n->needs_grad = needs_grad && record_;
  if (n->needs_grad) n->grad = Tensor(n->val.shape);
  return n;
}

Var Tape::constant(Tensor v) { return make(std::move(v), false); }

Var Tape::leaf(Parameter& p) {
  Var n = make(p.value, true);
  if (record_) leaves_.emplace_back(n, &p);
  return n;
}

Var Tape::linear(Var x, Var w, Var b) {
  if (x->val.cols() != w->val.rows() || w->val.cols() != b->val.rows() * b->val.cols())
    throw std::invalid_argument("linear: shape mismatch");
  Tensor out({x->val.rows(), w->val.cols()});
  map(out) = cmap(x->val) * cmap(w->val);
  map(out).rowwise() +=
      Eigen::Map<const Eigen::RowVectorXd>(b->val.data.data(), b->val.numel());
  Var y = make(std::move(out), x->needs_grad || w->needs_grad || b->needs_grad);
  if (y->needs_grad)
    push([x, w, b, y] {
      if (x->needs_grad) map(x->grad) += cmap(y->grad) * cmap(w->val).transpose();
      if (w->needs_grad) map(w->grad) += cmap(x->val).transpose() * cmap(y->grad);
      if (b->needs_grad)
        Eigen::Map<Eigen::RowVectorXd>(b->grad.data.data(), b->grad.numel()) +=
            cmap(y->grad).colwise().sum();
    });
  return y;
}

Var Tape::add(Var a, Var b) {
  if (a->val.shape != b->val.shape)
    throw std::invalid_argument("add: shape mismatch");
  Tensor out = a->val;
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += b->val.data[i];
  Var y = make(std::move(out), a->needs_grad || b->needs_grad);
  if (y->needs_grad)
    push([a, b, y] {
      if (a->needs_grad)
        for (int64_t i = 0; i < y->grad.numel(); ++i)
          a->grad.data[i] += y->grad.data[i];
      if (b->needs_grad)
        for (int64_t i = 0; i < y->grad.numel(); ++i)
          b->grad.data[i] += y->grad.data[i];
    });
  return y;
}

Var Tape::relu(Var x) {
  Tensor out = x->val;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Var y = make(std::move(out), x->needs_grad);
  if (y->needs_grad)
    push([x, y] {
      for (int64_t i = 0; i < y->grad.numel(); ++i)
        if (x->val.data[i] > 0.0) x->grad.data[i] += y->grad.data[i];
    });
  return y;
}

Var Tape::layer_norm(Var x, Var gain, Var bias) {
  const int rows = x->val.rows(), cols = x->val.cols();
  if (static_cast<int>(gain->val.numel()) != cols ||
      static_cast<int>(bias->val.numel()) != cols)
    throw std::invalid_argument("layer_norm: shape mismatch");
  Tensor out({rows, cols});
  auto xhat = std::make_shared<Tensor>(Tensor({rows, cols}));
  auto inv_sigma = std::make_shared<std::vector<double>>(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += x->val.at(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      double d = x->val.at(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    double is = 1.0 / std::sqrt(var + kLnEps);
    (*inv_sigma)[r] = is;
    for (int c = 0; c < cols; ++c) {
      double xh = (x->val.at(r, c) - mean) * is;
      xhat->at(r, c) = xh;
      out.at(r, c) = xh * gain->val.at(c) + bias->val.at(c);
    }
  }
  Var y = make(std::move(out), x->needs_grad || gain->needs_grad || bias->needs_grad);
  if (y->needs_grad)
    push([x, gain, bias, y, xhat, inv_sigma] {
      const int rows = y->grad.rows(), cols = y->grad.cols();
      for (int r = 0; r < rows; ++r) {
        double sum_gdy = 0.0, sum_gdy_xh = 0.0;
        for (int c = 0; c < cols; ++c) {
          double gdy = y->grad.at(r, c) * gain->val.at(c);
          sum_gdy += gdy;
          sum_gdy_xh += gdy * xhat->at(r, c);
        }
        if (x->needs_grad) {
          double is = (*inv_sigma)[r];
          for (int c = 0; c < cols; ++c) {
            double gdy = y->grad.at(r, c) * gain->val.at(c);
            x->grad.at(r, c) += is * (gdy - sum_gdy / cols -
                                      xhat->at(r, c) * sum_gdy_xh / cols);
          }
        }
        for (int c = 0; c < cols; ++c) {
          if (gain->needs_grad)
            gain->grad.at(c) += y->grad.at(r, c) * xhat->at(r, c);
          if (bias->needs_grad) bias->grad.at(c) += y->grad.at(r, c);
        }
      }
    });
  return y;
}

Var Tape::attention(Var q, Var k, Var v, int n_heads, bool causal) {
  const int tq = q->val.rows(), tk = k->val.rows(), d = q->val.cols();
  if (k->val.cols() != d || v->val.cols() != d || v->val.rows() != tk)
    throw std::invalid_argument("attention: shape mismatch");
  if (d % n_heads != 0)
    throw std::invalid_argument("attention: d_model not divisible by heads");
  const int dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor out({tq, d});
  // softmax rows kept for backward: one (tq, tk) block per head
  auto probs = std::make_shared<std::vector<Tensor>>();
  probs->reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    Tensor p({tq, tk});
    for (int i = 0; i < tq; ++i) {
      int limit = causal ? std::min(i + 1, tk) : tk;
      double mx = -1e300;
      for (int j = 0; j < limit; ++j) {
        double s = 0.0;
        for (int c = 0; c < dh; ++c)
          s += q->val.at(i, h * dh + c) * k->val.at(j, h * dh + c);
        s *= scale;
        p.at(i, j) = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (int j = 0; j < limit; ++j) {
        double e = std::exp(p.at(i, j) - mx);
        p.at(i, j) = e;
        z += e;
      }
      for (int j = 0; j < limit; ++j) p.at(i, j) /= z;
      for (int j = limit; j < tk; ++j) p.at(i, j) = 0.0;
      for (int c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (int j = 0; j < limit; ++j)
          acc += p.at(i, j) * v->val.at(j, h * dh + c);
        out.at(i, h * dh + c) = acc;
      }
    }
    probs->push_back(std::move(p));
  }
  Var y = make(std::move(out), q->needs_grad || k->needs_grad || v->needs_grad);
  if (y->needs_grad)
    push([q, k, v, y, probs, n_heads, causal, scale] {
      const int tq = q->val.rows(), tk = k->val.rows(), d = q->val.cols();
      const int dh = d / n_heads;
      for (int h = 0; h < n_heads; ++h) {
        const Tensor& p = (*probs)[h];
        for (int i = 0; i < tq; ++i) {
          int limit = causal ? std::min(i + 1, tk) : tk;
          // dS then softmax backward within the row
          std::vector<double> ds(limit, 0.0);
          double dot = 0.0;
          for (int j = 0; j < limit; ++j) {
            double acc = 0.0;
            for (int c = 0; c < dh; ++c)
              acc += y->grad.at(i, h * dh + c) * v->val.at(j, h * dh + c);
            ds[j] = acc;
            dot += acc * p.at(i, j);
          }
          for (int j = 0; j < limit; ++j) {
            double dz = p.at(i, j) * (ds[j] - dot);
            if (q->needs_grad)
              for (int c = 0; c < dh; ++c)
                q->grad.at(i, h * dh + c) += scale * dz * k->val.at(j, h * dh + c);
            if (k->needs_grad)
              for (int c = 0; c < dh; ++c)
                k->grad.at(j, h * dh + c) += scale * dz * q->val.at(i, h * dh + c);
            if (v->needs_grad)
              for (int c = 0; c < dh; ++c)
                v->grad.at(j, h * dh + c) +=
                    p.at(i, j) * y->grad.at(i, h * dh + c);
          }
        }
      }
    });
  return y;
}

Var Tape::embed(Var tok_table, Var pos_table, const std::vector<int>& ids) {
  const int t = static_cast<int>(ids.size());
  const int d = tok_table->val.cols();
  if (t > pos_table->val.rows())
    throw std::invalid_argument("sequence longer than the position table");
  Tensor out({t, d});
  for (int i = 0; i < t; ++i) {
    if (ids[i] < 0 || ids[i] >= tok_table->val.rows())
      throw std::invalid_argument("token id out of embedding range");
    for (int c = 0; c < d; ++c)
      out.at(i, c) = tok_table->val.at(ids[i], c) + pos_table->val.at(i, c);
  }
  Var y = make(std::move(out), tok_table->needs_grad || pos_table->needs_grad);
  if (y->needs_grad) {
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    push([tok_table, pos_table, y, ids_copy] {
      const int t = y->grad.rows(), d = y->grad.cols();
      for (int i = 0; i < t; ++i)
        for (int c = 0; c < d; ++c) {
          if (tok_table->needs_grad)
            tok_table->grad.at((*ids_copy)[i], c) += y->grad.at(i, c);
          if (pos_table->needs_grad) pos_table->grad.at(i, c) += y->grad.at(i, c);
        }
    });
  }
  return y;
}

Var Tape::cross_entropy(Var logits, const std::vector<int>& targets,
                        const std::vector<char>& supervise) {
  const int t = logits->val.rows(), vsz = logits->val.cols();
  if (static_cast<int>(targets.size()) != t ||
      static_cast<int>(supervise.size()) != t)
    throw std::invalid_argument("cross_entropy: shape mismatch");
  int count = 0;
  for (char s : supervise) count += s != 0;
  if (count == 0) throw std::invalid_argument("cross_entropy: all positions masked");

  auto soft = std::make_shared<Tensor>(Tensor({t, vsz}));
  double loss = 0.0;
  for (int i = 0; i < t; ++i) {
    if (!supervise[i]) continue;
    double mx = -1e300;
    for (int c = 0; c < vsz; ++c) mx = std::max(mx, logits->val.at(i, c));
    double z = 0.0;
    for (int c = 0; c < vsz; ++c) z += std::exp(logits->val.at(i, c) - mx);
    double lz = std::log(z) + mx;
    loss += lz - logits->val.at(i, targets[i]);
    for (int c = 0; c < vsz; ++c)
      soft->at(i, c) = std::exp(logits->val.at(i, c) - lz);
  }
  Tensor out({1});
  out.at(0) = loss / count;
  Var y = make(std::move(out), logits->needs_grad);
  if (y->needs_grad) {
    auto tg = std::make_shared<std::vector<int>>(targets);
    auto sup = std::make_shared<std::vector<char>>(supervise);
    push([logits, y, soft, tg, sup, count] {
      const int t = logits->val.rows(), vsz = logits->val.cols();
      double g = y->grad.at(0) / count;
      for (int i = 0; i < t; ++i) {
        if (!(*sup)[i]) continue;
        for (int c = 0; c < vsz; ++c)
          logits->grad.at(i, c) += g * soft->at(i, c);
        logits->grad.at(i, (*tg)[i]) -= g;
      }
    });
  }
  return y;
}

void Tape::enable_dropout(double rate, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout rate must be in [0,1)");
  if (rate > 0.0 && rng == nullptr)
    throw std::invalid_argument("dropout needs an rng");
  dropout_rate_ = rate;
  dropout_rng_ = rng;
}

Var Tape::dropout(Var x) {
  if (dropout_rate_ == 0.0) return x;
  const double keep = 1.0 - dropout_rate_;
  auto mask = std::make_shared<Tensor>(x->val);
  Tensor out = x->val;
  for (int64_t i = 0; i < out.numel(); ++i) {
    double m = dropout_rng_->uniform() < keep ? 1.0 / keep : 0.0;
    mask->data[i] = m;
    out.data[i] *= m;
  }
  Var y = make(std::move(out), x->needs_grad);
  if (y->needs_grad)
    push([x, y, mask] {
      for (int64_t i = 0; i < x->grad.numel(); ++i)
        x->grad.data[i] += y->grad.data[i] * mask->data[i];
    });
  return y;
}

Var Tape::add_scalars(Var a, Var b) {
  if (a->val.numel() != 1 || b->val.numel() != 1)
    throw std::invalid_argument("add_scalars: not scalars");
  Tensor out({1});
  out.at(0) = a->val.at(0) + b->val.at(0);
  Var y = make(std::move(out), a->needs_grad || b->needs_grad);
  if (y->needs_grad)
    push([a, b, y] {
      if (a->needs_grad) a->grad.at(0) += y->grad.at(0);
      if (b->needs_grad) b->grad.at(0) += y->grad.at(0);
    });
  return y;
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  if (loss->val.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  loss->grad.at(0) = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  for (auto& [node, param] : leaves_)
    for (int64_t i = 0; i < node->grad.numel(); ++i)
      param->grad.data[i] += node->grad.data[i];
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  const int rows = out.rows(), cols = out.cols();
  for (int r = 0; r < rows; ++r) {
    double mx = -1e300;
    for (int c = 0; c < cols; ++c) mx = std::max(mx, out.at(r, c));
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      z += out.at(r, c);
    }
    for (int c = 0; c < cols; ++c) out.at(r, c) /= z;
  }
  return out;
}

int argmax_row(const Tensor& t, int row) {
  int best = 0;
  for (int c = 1; c < t.cols(); ++c)
    if (t.at(row, c) > t.at(row, best)) best = c;
  return best;
}

}  // namespace apedit
