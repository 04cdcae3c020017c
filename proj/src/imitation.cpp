#include "apedit/imitation.hpp"

#include <stdexcept>

namespace apedit {

PseudoBatch make_pseudo(const Sentence& src, const Sentence& mt,
                        const Sentence& pe, ApeModel& model, double beta,
                        Rng& rng) {
  if (beta < 0.0 || beta > 1.0)
    throw std::invalid_argument("beta must lie in [0,1]");
  PseudoBatch batch;

  Sentence m_tilde;
  if (rng.uniform() > beta) {
    batch.branch_taken = PseudoBranch::OracleTags;
    m_tilde = plh_insert(mt, qe_tags(mt, pe));
  } else {
    batch.branch_taken = PseudoBranch::RandomMask;
    m_tilde = pe;
    for (int& id : m_tilde)
      if (rng.uniform() < 0.2) id = Vocabulary::kPlh;
  }

  batch.insertion.src = src;
  batch.insertion.pe = pe;
  for (int id : m_tilde)
    if (id != Vocabulary::kPlh) batch.insertion.mt.push_back(id);

  batch.substitution.src = src;
  batch.substitution.pe = pe;
  batch.substitution.mt = model.aom_fill(src, m_tilde);

  // spurious placeholders in each of the |pe|+1 gaps
  Sentence gapped;
  auto spurious = [&] {
    double u = rng.uniform();
    int count = u < 0.15 ? 1 : (u < 0.175 ? 2 : 0);
    for (int k = 0; k < count; ++k) gapped.push_back(Vocabulary::kPlh);
  };
  for (int id : pe) {
    spurious();
    gapped.push_back(id);
  }
  spurious();
  batch.deletion.src = src;
  batch.deletion.pe = pe;
  batch.deletion.mt = model.aom_fill(src, gapped);

  return batch;
}

std::vector<Triplet> expand_training_tuple(const Sentence& src,
                                           const Sentence& mt,
                                           const Sentence& pe, ApeModel& model,
                                           double beta, Rng& rng) {
  PseudoBatch batch = make_pseudo(src, mt, pe, model, beta, rng);
  Triplet original{src, mt, pe, std::nullopt};
  return {original, batch.insertion, batch.substitution, batch.deletion};
}

}  // namespace apedit
