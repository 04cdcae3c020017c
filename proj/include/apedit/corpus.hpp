#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "apedit/rng.hpp"

namespace apedit {

// Token ids. No PAD in the interior; BOS/EOS are added only at the neural
// boundary.
using Sentence = std::vector<int>;

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kPlh = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();

  // Adds a non-reserved token; returns its id. Duplicate tokens are an error.
  int add_token(const std::string& tok);

  int id_of(const std::string& tok) const;  // UNK id if absent
  const std::string& token_of(int id) const;
  bool contains(const std::string& tok) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  Sentence encode(const std::vector<std::string>& toks) const;
  std::vector<std::string> decode(const Sentence& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Triplet {
  Sentence src;  // source sentence
  Sentence mt;   // machine translation (may be empty)
  Sentence pe;   // post-edit / target
  std::optional<Sentence> ref;  // golden reference, used for pretraining pairs
};

struct NoiseSpec {
  double p_delete = 0.0;
  double p_substitute = 0.0;
  double p_insert = 0.0;
  double p_swap = 0.0;
  uint64_t seed = 0;
};

// Most frequent tokens kept, ties broken lexicographically. Deterministic.
// Throws std::runtime_error("empty corpus") on an empty stream.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       int max_size);

// The source side of a synthetic triplet is a fixed token-id permutation of
// the post-edit, reversed. Invertible, so the "translation" is learnable.
Sentence cipher_encode(const Sentence& pe, int vocab_size, uint64_t key);
Sentence cipher_decode(const Sentence& src, int vocab_size, uint64_t key);

// Corrupts pe per the noise spec: per-token delete/substitute, adjacent
// swap, per-gap insert. Content ids are drawn from [kNumReserved, vocab_size).
Sentence corrupt(const Sentence& pe, const NoiseSpec& noise, int vocab_size,
                 Rng& rng);

// seed drives sentence sampling and noise; cipher_key picks the fixed
// src permutation. Splits of one corpus must share the key or the
// "language" changes between them.
std::vector<Triplet> gen_synthetic_triplets(int n, int vocab_size,
                                            int len_min, int len_max,
                                            const NoiseSpec& noise,
                                            uint64_t seed, uint64_t cipher_key);

// Builds the vocabulary matching gen_synthetic_triplets' id space: content
// ids kNumReserved..vocab_size-1 named w5, w6, ...
Vocabulary synthetic_vocab(int vocab_size);

struct LoadStats {
  int unk_tokens = 0;
};

// One triplet per line: src TAB mt TAB pe [TAB ref], fields are
// space-separated tokens. Unknown tokens map to UNK and are counted.
std::vector<Triplet> load_triplets(const std::string& path,
                                   const Vocabulary& vocab,
                                   LoadStats* stats = nullptr);
void save_triplets(const std::string& path,
                   const std::vector<Triplet>& triplets,
                   const Vocabulary& vocab);

// |synthetic| + factor copies of each real triplet, shuffled deterministically.
std::vector<Triplet> oversample_merge(const std::vector<Triplet>& real,
                                      const std::vector<Triplet>& synthetic,
                                      int factor, uint64_t seed);

}  // namespace apedit
