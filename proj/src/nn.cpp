#include "apedit/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apedit {

Parameter& ParamRegistry::create(const std::string& name,
                                 std::vector<int> shape) {
  if (index_.count(name))
    throw std::logic_error("duplicate parameter: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(shape);
  p->adam_m = Tensor(shape);
  p->adam_v = Tensor(std::move(shape));
  Parameter& ref = *p;
  index_.emplace(name, p.get());
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParamRegistry::find(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter: " + name);
  return *it->second;
}

int64_t ParamRegistry::total_elements() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p->value.numel();
  return n;
}

void ParamRegistry::zero_grads() {
  for (const auto& p : params_) p->grad.fill(0.0);
}

void init_uniform(Parameter& p, int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : p.value.data) v = (2.0 * rng.uniform() - 1.0) * bound;
}

double Adam::lr_at(long long step) const {
  double t = static_cast<double>(step);
  double w = static_cast<double>(cfg_.warmup_steps);
  return cfg_.base_lr * std::min(1.0 / std::sqrt(t), t / (w * std::sqrt(w)));
}

void Adam::step(const std::vector<Parameter*>& params) {
  ++step_;
  double lr = lr_at(step_);
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (Parameter* p : params) {
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      double g = p->grad.data[i];
      if (std::isnan(g) || std::isinf(g))
        throw std::runtime_error("non-finite gradient in parameter " + p->name);
      double& m = p->adam_m.data[i];
      double& v = p->adam_v.data[i];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    ++p->version;
  }
}

GradCheckReport grad_check(ParamRegistry& registry,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& backward_fn,
                           double tolerance, int max_elems_per_param) {
  backward_fn();
  // snapshot analytic gradients before finite differencing perturbs state
  std::vector<Tensor> analytic;
  for (const auto& p : registry.all()) analytic.push_back(p->grad);

  const double eps = 1e-5;
  GradCheckReport report;
  size_t pi = 0;
  for (const auto& p : registry.all()) {
    GradCheckEntry entry;
    entry.name = p->name;
    int64_t n = p->value.numel();
    int64_t stride = 1;
    if (max_elems_per_param > 0 && n > max_elems_per_param)
      stride = (n + max_elems_per_param - 1) / max_elems_per_param;
    for (int64_t i = 0; i < n; i += stride) {
      double saved = p->value.data[i];
      p->value.data[i] = saved + eps;
      double up = loss_fn();
      p->value.data[i] = saved - eps;
      double down = loss_fn();
      p->value.data[i] = saved;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[pi].data[i];
      double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      double rel = std::abs(a - numeric) / denom;
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
    }
    if (entry.max_rel_error > report.worst_error) {
      report.worst_error = entry.max_rel_error;
      report.worst_param = entry.name;
    }
    report.entries.push_back(std::move(entry));
    ++pi;
  }
  report.pass = report.worst_error < tolerance;
  return report;
}

void save_params(const std::string& path, const ParamRegistry& registry,
                 const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  for (const auto& line : header_lines) out << "# " << line << "\n";
  char buf[32];
  for (const auto& p : registry.all()) {
    out << p->name;
    for (int d : p->value.shape) out << ' ' << d;
    out << '\n';
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", p->value.data[i]);
      out << buf << (i + 1 == p->value.numel() ? '\n' : ' ');
    }
    if (p->value.numel() == 0) out << '\n';
  }
}

std::vector<std::string> load_params(const std::string& path,
                                     ParamRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::vector<std::string> header;
  std::string line;
  std::streampos data_start = in.tellg();
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      header.push_back(line.substr(2));
      data_start = in.tellg();
    } else {
      break;
    }
  }
  in.clear();
  in.seekg(data_start);
  for (const auto& p : registry.all()) {
    if (!std::getline(in, line))
      throw std::runtime_error("checkpoint truncated before " + p->name);
    std::istringstream head(line);
    std::string name;
    head >> name;
    if (name != p->name)
      throw std::runtime_error("checkpoint name mismatch: expected " + p->name +
                               ", found " + name);
    std::vector<int> shape;
    int d;
    while (head >> d) shape.push_back(d);
    if (shape != p->value.shape)
      throw std::runtime_error("checkpoint shape mismatch for " + p->name);
    if (!std::getline(in, line))
      throw std::runtime_error("checkpoint truncated in " + p->name);
    std::istringstream values(line);
    for (int64_t i = 0; i < p->value.numel(); ++i)
      if (!(values >> p->value.data[i]))
        throw std::runtime_error("checkpoint value parse error in " + p->name);
  }
  if (std::getline(in, line) && !line.empty())
    throw std::runtime_error("checkpoint has trailing data");
  return header;
}

}  // namespace apedit
