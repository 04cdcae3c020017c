#pragma once

#include <map>
#include <string>
#include <vector>

#include "apedit/corpus.hpp"

namespace apedit {

struct PrF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double bleu = 0.0;
  double ter = 0.0;
  std::map<std::string, PrF1> per_class_f1;
  double pearson = 0.0;
  bool pearson_degenerate = false;  // variance of an argument was zero
};

// Corpus BLEU-4, unsmoothed: any n-gram order with zero matches yields 0.
// Scaled to [0,100].
double corpus_bleu(const std::vector<Sentence>& candidates,
                   const std::vector<Sentence>& references);

// Shift-free TER: 100 * sum of Levenshtein distances / sum of reference
// lengths.
double corpus_ter(const std::vector<Sentence>& candidates,
                  const std::vector<Sentence>& references);

int levenshtein(const Sentence& a, const Sentence& b);

// One-vs-rest precision/recall/F1 per class over token positions. Classes
// absent from both pred and gold are omitted.
std::map<std::string, PrF1> tag_prf(const std::vector<std::string>& pred,
                                    const std::vector<std::string>& gold);

// Sample Pearson r. When either variance is zero, returns 0 and sets the
// flag if given.
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* degenerate = nullptr);

}  // namespace apedit
