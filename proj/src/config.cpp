#include "apedit/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace apedit {

ModelConfig Config::model_config() const {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.d_model = d_model;
  mc.n_layers = n_layers;
  mc.n_heads = n_heads;
  mc.d_ff = d_ff;
  mc.max_len = max_len;
  mc.k_max = k_max;
  mc.init_seed = seed;
  return mc;
}

namespace {

struct Field {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <typename T>
T parse_value(const std::string& s);

template <>
int parse_value<int>(const std::string& s) {
  size_t pos = 0;
  int v = std::stoi(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

template <>
uint64_t parse_value<uint64_t>(const std::string& s) {
  size_t pos = 0;
  uint64_t v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

template <>
double parse_value<double>(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

template <>
bool parse_value<bool>(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("bad boolean: " + s);
}

template <>
std::string parse_value<std::string>(const std::string& s) {
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
Field make_field(T Config::* member) {
  Field f;
  f.get = [member](const Config& c) {
    if constexpr (std::is_same_v<T, double>) return format_double(c.*member);
    else if constexpr (std::is_same_v<T, bool>) return std::string(c.*member ? "true" : "false");
    else if constexpr (std::is_same_v<T, std::string>) return c.*member;
    else return std::to_string(c.*member);
  };
  f.set = [member](Config& c, const std::string& v) {
    c.*member = parse_value<T>(v);
  };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"model.d_model", make_field(&Config::d_model)},
      {"model.layers", make_field(&Config::n_layers)},
      {"model.heads", make_field(&Config::n_heads)},
      {"model.ffn", make_field(&Config::d_ff)},
      {"model.max_len", make_field(&Config::max_len)},
      {"model.k_max", make_field(&Config::k_max)},
      {"data.vocab_size", make_field(&Config::vocab_size)},
      {"data.gen_train", make_field(&Config::gen_train)},
      {"data.gen_dev", make_field(&Config::gen_dev)},
      {"data.gen_test", make_field(&Config::gen_test)},
      {"data.len_min", make_field(&Config::len_min)},
      {"data.len_max", make_field(&Config::len_max)},
      {"data.p_delete", make_field(&Config::p_delete)},
      {"data.p_substitute", make_field(&Config::p_substitute)},
      {"data.p_insert", make_field(&Config::p_insert)},
      {"data.p_swap", make_field(&Config::p_swap)},
      {"data.oversample", make_field(&Config::oversample)},
      {"data.train_path", make_field(&Config::train_path)},
      {"data.dev_path", make_field(&Config::dev_path)},
      {"data.test_path", make_field(&Config::test_path)},
      {"data.vocab_path", make_field(&Config::vocab_path)},
      {"train.base_lr", make_field(&Config::base_lr)},
      {"train.warmup", make_field(&Config::warmup_steps)},
      {"train.max_steps", make_field(&Config::max_steps)},
      {"train.batch_tokens", make_field(&Config::batch_tokens)},
      {"train.pretrain_steps", make_field(&Config::pretrain_steps)},
      {"train.mask_rate", make_field(&Config::mask_rate)},
      {"train.beta", make_field(&Config::beta)},
      {"train.augment", make_field(&Config::augment)},
      {"train.eval_every", make_field(&Config::eval_every)},
      {"train.patience", make_field(&Config::patience)},
      {"train.dropout", make_field(&Config::dropout)},
      {"infer.tau", make_field(&Config::tau)},
      {"infer.steps", make_field(&Config::refine_steps)},
      {"seed", make_field(&Config::seed)},
  };
  return table;
}

}  // namespace

std::vector<std::string> Config::serialize() const {
  std::vector<std::string> lines;
  for (const auto& [key, field] : fields())
    lines.push_back(key + " = " + field.get(*this));
  return lines;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = fields().find(key);
  if (it == fields().end())
    throw std::invalid_argument("unknown config key: " + key);
  it->second.set(*this, value);
}

Config Config::from_lines(const std::vector<std::string>& lines) {
  Config cfg;
  int lineno = 0;
  for (const auto& raw : lines) {
    ++lineno;
    std::string line = raw;
    size_t comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return from_lines(lines);
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const auto& line : serialize()) out << line << "\n";
}

void apply_overrides(Config& cfg, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + ov);
    cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
}

}  // namespace apedit
