#pragma once

#include <string>
#include <vector>

#include "apedit/corpus.hpp"

namespace apedit {

// Per-token edit tags derived from aligning an MT sentence to its post-edit.
// body[i] == 1 keeps token i, 0 deletes it, -1 replaces it, k > 1 keeps it
// and inserts k-1 tokens after it. Insertions before the first token are
// held in the sentinel slot: emit sentinel-1 tokens up front.
struct QeTagSequence {
  int sentinel = 1;
  std::vector<int> body;

  bool operator==(const QeTagSequence&) const = default;
};

struct Hter {
  double value = 0.0;
  long long edits = 0;
  long long predicted_length = 0;
};

enum class FineClass { K, E, R, M };  // kept / erroneous / redundant / missing
enum class OkBad { OK, BAD };

// Minimum-edit-distance alignment with a fixed backtrace preference
// (substitution, then insertion, then deletion, then match), so tags are
// deterministic. Implied edit count equals the Levenshtein distance.
QeTagSequence qe_tags(const Sentence& mt, const Sentence& pe);

// Expands mt into a placeholder skeleton the same length as the post-edit
// the tags were computed against.
Sentence plh_insert(const Sentence& mt, const QeTagSequence& q);

Hter hter(const QeTagSequence& q);

// plh_insert, then substitute fill tokens into the placeholder slots
// left to right. |fill| must equal the number of slots.
Sentence apply_edit_script(const Sentence& mt, const QeTagSequence& q,
                           const Sentence& fill);

std::vector<FineClass> to_fine_classes(const QeTagSequence& q);
std::vector<OkBad> to_ok_bad(const std::vector<FineClass>& classes);

// Clamps body values to [-1, k_max] and the sentinel to [1, k_max] for use
// as model targets. Returns the number of clipped positions. Never used for
// metric computation.
int clip_tags(QeTagSequence& q, int k_max);

int count_plh_slots(const QeTagSequence& q);

const char* fine_class_name(FineClass c);

}  // namespace apedit
