#include "apedit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace apedit {

namespace {
const char* kReservedNames[] = {"[PAD]", "[BOS]", "[EOS]", "[PLH]", "[UNK]"};
}

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) {
    int id = static_cast<int>(tokens_.size());
    tokens_.push_back(name);
    index_.emplace(name, id);
  }
}

int Vocabulary::add_token(const std::string& tok) {
  if (index_.count(tok)) throw std::runtime_error("duplicate token: " + tok);
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(tok);
  index_.emplace(tok, id);
  return id;
}

int Vocabulary::id_of(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[id];
}

bool Vocabulary::contains(const std::string& tok) const {
  return index_.count(tok) > 0;
}

Sentence Vocabulary::encode(const std::vector<std::string>& toks) const {
  Sentence ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const Sentence& ids) const {
  std::vector<std::string> toks;
  toks.reserve(ids.size());
  for (int id : ids) toks.push_back(token_of(id));
  return toks;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary: " + path);
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (lineno < kNumReserved) {
      if (line != kReservedNames[lineno])
        throw std::runtime_error("vocabulary line " + std::to_string(lineno + 1) +
                                 ": expected reserved token");
    } else {
      v.add_token(line);
    }
    ++lineno;
  }
  if (lineno < kNumReserved)
    throw std::runtime_error("vocabulary file too short: " + path);
  return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       int max_size) {
  if (max_size <= Vocabulary::kNumReserved)
    throw std::invalid_argument("max_size must exceed the reserved ids");
  if (sentences.empty()) throw std::runtime_error("empty corpus");
  // std::map gives the lexicographic order used for tie-breaking
  std::map<std::string, long long> freq;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++freq[tok];
  std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  int room = max_size - Vocabulary::kNumReserved;
  for (const auto& [tok, count] : items) {
    if (room == 0) break;
    v.add_token(tok);
    --room;
  }
  return v;
}

namespace {

// Fixed pseudo-random permutation of the content ids, derived from the key.
std::vector<int> cipher_table(int vocab_size, uint64_t key) {
  std::vector<int> table;
  for (int i = Vocabulary::kNumReserved; i < vocab_size; ++i) table.push_back(i);
  Rng rng(key * 0x9e3779b97f4a7c15ULL + 1);
  rng.shuffle(table);
  return table;
}

}  // namespace

Sentence cipher_encode(const Sentence& pe, int vocab_size, uint64_t key) {
  auto table = cipher_table(vocab_size, key);
  Sentence out(pe.rbegin(), pe.rend());
  for (int& id : out) {
    if (id >= Vocabulary::kNumReserved)
      id = table[id - Vocabulary::kNumReserved];
  }
  return out;
}

Sentence cipher_decode(const Sentence& src, int vocab_size, uint64_t key) {
  auto table = cipher_table(vocab_size, key);
  std::vector<int> inverse(vocab_size, -1);
  for (int i = 0; i < static_cast<int>(table.size()); ++i)
    inverse[table[i]] = i + Vocabulary::kNumReserved;
  Sentence out(src.rbegin(), src.rend());
  for (int& id : out) {
    if (id >= Vocabulary::kNumReserved) id = inverse[id];
  }
  return out;
}

Sentence corrupt(const Sentence& pe, const NoiseSpec& noise, int vocab_size,
                 Rng& rng) {
  int content = vocab_size - Vocabulary::kNumReserved;
  auto random_content = [&] {
    return Vocabulary::kNumReserved + static_cast<int>(rng.uniform_int(content));
  };
  Sentence out;
  out.reserve(pe.size() + 4);
  auto maybe_insert = [&] {
    if (rng.uniform() < noise.p_insert) out.push_back(random_content());
  };
  size_t i = 0;
  while (i < pe.size()) {
    maybe_insert();  // gap before token i
    double u = rng.uniform();
    if (u < noise.p_delete) {
      ++i;
      continue;
    }
    u -= noise.p_delete;
    if (u < noise.p_substitute) {
      out.push_back(random_content());
      ++i;
      continue;
    }
    u -= noise.p_substitute;
    if (u < noise.p_swap && i + 1 < pe.size()) {
      out.push_back(pe[i + 1]);
      out.push_back(pe[i]);
      i += 2;
      continue;
    }
    out.push_back(pe[i]);
    ++i;
  }
  maybe_insert();  // final gap
  return out;
}

std::vector<Triplet> gen_synthetic_triplets(int n, int vocab_size, int len_min,
                                            int len_max, const NoiseSpec& noise,
                                            uint64_t seed,
                                            uint64_t cipher_key) {
  if (vocab_size < 10) throw std::invalid_argument("vocab_size must be >= 10");
  if (len_min < 1 || len_max < len_min)
    throw std::invalid_argument("bad length range");
  int content = vocab_size - Vocabulary::kNumReserved;
  std::vector<Triplet> out;
  out.reserve(n);
  for (int idx = 0; idx < n; ++idx) {
    // per-item seed so generation could run in parallel
    Rng rng(seed ^ (0x51a9b2c7d3e4f501ULL * (idx + 1)));
    int len = len_min + static_cast<int>(rng.uniform_int(len_max - len_min + 1));
    Triplet t;
    t.pe.reserve(len);
    for (int j = 0; j < len; ++j)
      t.pe.push_back(Vocabulary::kNumReserved +
                     static_cast<int>(rng.uniform_int(content)));
    t.src = cipher_encode(t.pe, vocab_size, cipher_key);
    t.mt = corrupt(t.pe, noise, vocab_size, rng);
    t.ref = t.pe;
    out.push_back(std::move(t));
  }
  return out;
}

Vocabulary synthetic_vocab(int vocab_size) {
  Vocabulary v;
  for (int i = Vocabulary::kNumReserved; i < vocab_size; ++i)
    v.add_token("w" + std::to_string(i));
  return v;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> toks;
  std::string tok;
  while (iss >> tok) toks.push_back(tok);
  return toks;
}

Sentence decode_field(const std::string& field, const Vocabulary& vocab,
                      LoadStats* stats) {
  Sentence ids;
  for (const auto& tok : split_ws(field)) {
    int id = vocab.id_of(tok);
    if (id == Vocabulary::kUnk && tok != "[UNK]" && stats) ++stats->unk_tokens;
    ids.push_back(id);
  }
  return ids;
}

std::string encode_field(const Sentence& ids, const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token_of(ids[i]);
  }
  return out;
}

}  // namespace

std::vector<Triplet> load_triplets(const std::string& path,
                                   const Vocabulary& vocab, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read triplet file: " + path);
  std::vector<Triplet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 && fields.size() != 4)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected 3 or 4 fields");
    Triplet t;
    t.src = decode_field(fields[0], vocab, stats);
    t.mt = decode_field(fields[1], vocab, stats);
    t.pe = decode_field(fields[2], vocab, stats);
    if (fields.size() == 4) t.ref = decode_field(fields[3], vocab, stats);
    out.push_back(std::move(t));
  }
  return out;
}

void save_triplets(const std::string& path, const std::vector<Triplet>& triplets,
                   const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write triplet file: " + path);
  for (const auto& t : triplets) {
    out << encode_field(t.src, vocab) << '\t' << encode_field(t.mt, vocab)
        << '\t' << encode_field(t.pe, vocab);
    if (t.ref) out << '\t' << encode_field(*t.ref, vocab);
    out << '\n';
  }
}

std::vector<Triplet> oversample_merge(const std::vector<Triplet>& real,
                                      const std::vector<Triplet>& synthetic,
                                      int factor, uint64_t seed) {
  if (factor < 1) throw std::invalid_argument("factor must be >= 1");
  std::vector<Triplet> out = synthetic;
  for (int k = 0; k < factor; ++k)
    out.insert(out.end(), real.begin(), real.end());
  Rng rng(seed);
  rng.shuffle(out);
  return out;
}

}  // namespace apedit
