#include "apedit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace apedit {

int levenshtein(const Sentence& a, const Sentence& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  std::vector<int> prev(n + 1), cur(n + 1);
  for (int j = 0; j <= n; ++j) prev[j] = j;
  for (int i = 1; i <= m; ++i) {
    cur[0] = i;
    for (int j = 1; j <= n; ++j)
      cur[j] = std::min({prev[j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0),
                         cur[j - 1] + 1, prev[j] + 1});
    std::swap(prev, cur);
  }
  return prev[n];
}

double corpus_bleu(const std::vector<Sentence>& candidates,
                   const std::vector<Sentence>& references) {
  if (candidates.size() != references.size() || candidates.empty())
    throw std::invalid_argument("corpus_bleu: list length mismatch");
  constexpr int kMaxOrder = 4;
  long long matches[kMaxOrder] = {0, 0, 0, 0};
  long long totals[kMaxOrder] = {0, 0, 0, 0};
  long long cand_len = 0, ref_len = 0;
  using Ngram = std::vector<int>;
  for (size_t k = 0; k < candidates.size(); ++k) {
    const Sentence& c = candidates[k];
    const Sentence& r = references[k];
    cand_len += static_cast<long long>(c.size());
    ref_len += static_cast<long long>(r.size());
    for (int order = 1; order <= kMaxOrder; ++order) {
      std::map<Ngram, long long> ref_counts;
      for (int i = 0; i + order <= static_cast<int>(r.size()); ++i)
        ++ref_counts[Ngram(r.begin() + i, r.begin() + i + order)];
      std::map<Ngram, long long> cand_counts;
      for (int i = 0; i + order <= static_cast<int>(c.size()); ++i)
        ++cand_counts[Ngram(c.begin() + i, c.begin() + i + order)];
      for (const auto& [ng, count] : cand_counts) {
        totals[order - 1] += count;
        auto it = ref_counts.find(ng);
        if (it != ref_counts.end())
          matches[order - 1] += std::min(count, it->second);
      }
    }
  }
  double log_precision_sum = 0.0;
  for (int o = 0; o < kMaxOrder; ++o) {
    if (matches[o] == 0 || totals[o] == 0) return 0.0;
    log_precision_sum += std::log(static_cast<double>(matches[o]) /
                                  static_cast<double>(totals[o]));
  }
  double bp = 1.0;
  if (cand_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) /
                            static_cast<double>(cand_len));
  return 100.0 * bp * std::exp(log_precision_sum / kMaxOrder);
}

double corpus_ter(const std::vector<Sentence>& candidates,
                  const std::vector<Sentence>& references) {
  if (candidates.size() != references.size() || candidates.empty())
    throw std::invalid_argument("corpus_ter: list length mismatch");
  long long edits = 0, ref_len = 0;
  for (size_t k = 0; k < candidates.size(); ++k) {
    if (references[k].empty())
      throw std::invalid_argument("corpus_ter: empty reference sentence");
    edits += levenshtein(candidates[k], references[k]);
    ref_len += static_cast<long long>(references[k].size());
  }
  return 100.0 * static_cast<double>(edits) / static_cast<double>(ref_len);
}

std::map<std::string, PrF1> tag_prf(const std::vector<std::string>& pred,
                                    const std::vector<std::string>& gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("tag_prf: length mismatch");
  std::set<std::string> classes(pred.begin(), pred.end());
  classes.insert(gold.begin(), gold.end());
  std::map<std::string, PrF1> out;
  for (const auto& cls : classes) {
    long long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
      bool p = pred[i] == cls, g = gold[i] == cls;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    PrF1 s;
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    out[cls] = s;
  }
  return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* degenerate) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need equal lengths >= 2");
  if (degenerate) *degenerate = false;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace apedit
