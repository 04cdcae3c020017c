#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace apedit {

// Dense row-major double tensor. Rank 1 or 2 everywhere in this codebase;
// batch APIs stack per-sequence results into rank-3 views by hand.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel()), 0.0);
  }

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols() + j]; }
  double at(int i, int j) const {
    return data[static_cast<size_t>(i) * cols() + j];
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
};

}  // namespace apedit
