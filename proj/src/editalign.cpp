#include "apedit/editalign.hpp"

#include <algorithm>
#include <stdexcept>

namespace apedit {

QeTagSequence qe_tags(const Sentence& mt, const Sentence& pe) {
  const int m = static_cast<int>(mt.size());
  const int n = static_cast<int>(pe.size());
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (int i = 0; i <= m; ++i) d[i][0] = i;
  for (int j = 0; j <= n; ++j) d[0][j] = j;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (mt[i - 1] != pe[j - 1] ? 1 : 0),
                          d[i][j - 1] + 1, d[i - 1][j] + 1});

  QeTagSequence q;
  q.body.assign(m, 1);
  // tag slot for index i, with i == 0 mapping to the sentinel
  auto tag = [&](int i) -> int& { return i == 0 ? q.sentinel : q.body[i - 1]; };
  int i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i - 1][j - 1] + 1 == d[i][j]) {
      tag(i) = -1;
      --i;
      --j;
    } else if (j > 0 && d[i][j - 1] + 1 == d[i][j]) {
      ++tag(i);
      --j;
    } else if (i > 0 && d[i - 1][j] + 1 == d[i][j]) {
      tag(i) = 0;
      --i;
    } else {
      --i;
      --j;
    }
  }
  return q;
}

Sentence plh_insert(const Sentence& mt, const QeTagSequence& q) {
  if (q.body.size() != mt.size())
    throw std::invalid_argument("tag/sentence length mismatch");
  Sentence out;
  for (int k = 1; k < q.sentinel; ++k) out.push_back(Vocabulary::kPlh);
  for (size_t i = 0; i < mt.size(); ++i) {
    int qi = q.body[i];
    if (qi == -1) {
      out.push_back(Vocabulary::kPlh);
    } else if (qi >= 1) {
      out.push_back(mt[i]);
      for (int k = 1; k < qi; ++k) out.push_back(Vocabulary::kPlh);
    }
    // qi == 0: token dropped
  }
  return out;
}

Hter hter(const QeTagSequence& q) {
  Hter h;
  for (int qi : q.body) {
    h.edits += qi < 1 ? 1 : qi - 1;
    h.predicted_length += std::abs(qi);
  }
  h.edits += q.sentinel - 1;
  h.predicted_length += q.sentinel - 1;
  if (h.predicted_length > 0)
    h.value = static_cast<double>(h.edits) / static_cast<double>(h.predicted_length);
  else
    h.value = h.edits > 0 ? 1.0 : 0.0;
  return h;
}

Sentence apply_edit_script(const Sentence& mt, const QeTagSequence& q,
                           const Sentence& fill) {
  Sentence out = plh_insert(mt, q);
  size_t next = 0;
  for (int& id : out) {
    if (id == Vocabulary::kPlh) {
      if (next >= fill.size())
        throw std::invalid_argument("fill shorter than placeholder count");
      id = fill[next++];
    }
  }
  if (next != fill.size())
    throw std::invalid_argument("fill longer than placeholder count");
  return out;
}

std::vector<FineClass> to_fine_classes(const QeTagSequence& q) {
  std::vector<FineClass> out;
  out.reserve(q.body.size());
  for (int qi : q.body) {
    if (qi == 1)
      out.push_back(FineClass::K);
    else if (qi == -1)
      out.push_back(FineClass::E);
    else if (qi == 0)
      out.push_back(FineClass::R);
    else
      out.push_back(FineClass::M);
  }
  return out;
}

std::vector<OkBad> to_ok_bad(const std::vector<FineClass>& classes) {
  std::vector<OkBad> out;
  out.reserve(classes.size());
  for (FineClass c : classes)
    out.push_back(c == FineClass::K || c == FineClass::M ? OkBad::OK
                                                         : OkBad::BAD);
  return out;
}

int clip_tags(QeTagSequence& q, int k_max) {
  int clipped = 0;
  if (q.sentinel > k_max) {
    q.sentinel = k_max;
    ++clipped;
  }
  for (int& qi : q.body) {
    if (qi > k_max) {
      qi = k_max;
      ++clipped;
    }
  }
  return clipped;
}

int count_plh_slots(const QeTagSequence& q) {
  int slots = q.sentinel - 1;
  for (int qi : q.body) {
    if (qi == -1)
      ++slots;
    else if (qi > 1)
      slots += qi - 1;
  }
  return slots;
}

const char* fine_class_name(FineClass c) {
  switch (c) {
    case FineClass::K: return "K";
    case FineClass::E: return "E";
    case FineClass::R: return "R";
    default: return "M";
  }
}

}  // namespace apedit
