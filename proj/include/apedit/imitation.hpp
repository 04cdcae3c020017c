#pragma once

#include "apedit/model.hpp"

namespace apedit {

enum class PseudoBranch { OracleTags, RandomMask };

// Three manufactured triplets that isolate the insertion, substitution and
// deletion skills; src and pe are always those of the seed triplet.
struct PseudoBatch {
  Triplet insertion;
  Triplet substitution;
  Triplet deletion;
  PseudoBranch branch_taken = PseudoBranch::OracleTags;
};

// insertion: placeholder skeleton with PLHs stripped;
// substitution: model's own fill of the skeleton;
// deletion: model's fill of pe with spurious per-gap placeholders
// (one w.p. 0.15, two w.p. 0.025).
PseudoBatch make_pseudo(const Sentence& src, const Sentence& mt,
                        const Sentence& pe, ApeModel& model, double beta,
                        Rng& rng);

// [original, insertion, substitution, deletion]
std::vector<Triplet> expand_training_tuple(const Sentence& src,
                                           const Sentence& mt,
                                           const Sentence& pe, ApeModel& model,
                                           double beta, Rng& rng);

}  // namespace apedit
