#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "apedit/corpus.hpp"
#include "apedit/metrics.hpp"
#include "doctest.h"

using namespace apedit;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/apedit_test_") + name;
}

bool same_sentence(const Sentence& a, const Sentence& b) { return a == b; }

}  // namespace

TEST_CASE("reserved ids are fixed") {
  Vocabulary v;
  CHECK(v.size() == 5);
  CHECK(v.id_of("[PAD]") == 0);
  CHECK(v.id_of("[BOS]") == 1);
  CHECK(v.id_of("[EOS]") == 2);
  CHECK(v.id_of("[PLH]") == 3);
  CHECK(v.id_of("[UNK]") == 4);
  CHECK(v.token_of(Vocabulary::kPlh) == "[PLH]");
}

TEST_CASE("build_vocab frequency order with lexicographic ties") {
  std::vector<std::vector<std::string>> corpus = {{"a", "b"}, {"a", "c"}};
  Vocabulary v = build_vocab(corpus, 8);
  CHECK(v.size() == 8);
  CHECK(v.id_of("a") == 5);  // most frequent gets the lowest non-reserved id
  CHECK(v.contains("b"));
  CHECK(v.contains("c"));
}

TEST_CASE("build_vocab single token corpus") {
  Vocabulary v = build_vocab({{"a"}}, 6);
  CHECK(v.size() == 6);
  CHECK(v.id_of("a") == 5);
}

TEST_CASE("build_vocab rejects empty corpus and tiny max_size") {
  CHECK_THROWS_WITH(build_vocab({}, 10), "empty corpus");
  CHECK_THROWS(build_vocab({{"a"}}, 5));
}

TEST_CASE("build_vocab keeps exactly the most frequent symbols") {
  // independent frequency tally oracle
  Rng rng(77);
  std::vector<std::vector<std::string>> corpus;
  std::map<std::string, int> tally;
  for (int s = 0; s < 1000; ++s) {
    std::vector<std::string> sent;
    int len = 3 + static_cast<int>(rng.uniform_int(8));
    for (int i = 0; i < len; ++i) {
      // skewed draw so frequencies differ
      int sym = static_cast<int>(rng.uniform_int(50) * rng.uniform());
      sent.push_back("sym" + std::to_string(sym));
      ++tally[sent.back()];
    }
    corpus.push_back(sent);
  }
  Vocabulary v = build_vocab(corpus, 30);
  std::vector<std::pair<int, std::string>> by_freq;
  for (const auto& [tok, n] : tally) by_freq.emplace_back(-n, tok);
  std::sort(by_freq.begin(), by_freq.end());
  for (int i = 0; i < 25; ++i) {
    INFO("token ", by_freq[i].second);
    CHECK(v.contains(by_freq[i].second));
  }
  CHECK(v.size() == 30);
}

TEST_CASE("vocabulary round trip through encode/decode and file") {
  Vocabulary v = build_vocab({{"x", "y", "z"}}, 10);
  Sentence ids = v.encode({"x", "z", "y", "x"});
  CHECK(v.encode(v.decode(ids)) == ids);
  auto path = temp_path("vocab.txt");
  v.save(path);
  Vocabulary v2 = Vocabulary::load(path);
  CHECK(v2.size() == v.size());
  CHECK(v2.id_of("z") == v.id_of("z"));
  std::remove(path.c_str());
}

TEST_CASE("cipher is invertible") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Sentence pe;
    int len = static_cast<int>(rng.uniform_int(12));
    for (int i = 0; i < len; ++i)
      pe.push_back(5 + static_cast<int>(rng.uniform_int(45)));
    Sentence src = cipher_encode(pe, 50, 42);
    CHECK(cipher_decode(src, 50, 42) == pe);
  }
}

TEST_CASE("zero noise leaves mt identical to pe") {
  NoiseSpec noise;  // all zeros
  auto triplets = gen_synthetic_triplets(50, 20, 1, 10, noise, 9, 9);
  for (const auto& t : triplets) {
    CHECK(same_sentence(t.mt, t.pe));
    CHECK(cipher_decode(t.src, 20, 9) == t.pe);
    REQUIRE(t.ref.has_value());
    CHECK(*t.ref == t.pe);
  }
}

TEST_CASE("noisy corpus TER matches an independent Levenshtein sweep") {
  NoiseSpec noise;
  noise.p_delete = 0.1;
  noise.p_substitute = 0.1;
  auto triplets = gen_synthetic_triplets(1000, 40, 4, 12, noise, 123, 123);
  long long edits = 0, ref_len = 0;
  for (const auto& t : triplets) {
    edits += levenshtein(t.mt, t.pe);
    ref_len += static_cast<long long>(t.pe.size());
  }
  double oracle_ter = 100.0 * edits / ref_len;
  std::vector<Sentence> cand, ref;
  for (const auto& t : triplets) {
    cand.push_back(t.mt);
    ref.push_back(t.pe);
  }
  CHECK(corpus_ter(cand, ref) == doctest::Approx(oracle_ter).epsilon(1e-12));
  // the empirical rate tracks the configured noise (edits <= injected noise
  // events, so compare within a loose band)
  CHECK(oracle_ter > 10.0);
  CHECK(oracle_ter < 30.0);
}

TEST_CASE("per-token noise statistics track the spec rates") {
  NoiseSpec noise;
  noise.p_delete = 0.1;
  auto del_trip = gen_synthetic_triplets(2000, 40, 8, 12, noise, 5, 5);
  long long tokens = 0, deleted = 0;
  for (const auto& t : del_trip) {
    tokens += static_cast<long long>(t.pe.size());
    deleted += static_cast<long long>(t.pe.size() - t.mt.size());
  }
  double rate = static_cast<double>(deleted) / tokens;
  CHECK(tokens > 10000);
  CHECK(rate > 0.08);
  CHECK(rate < 0.12);

  NoiseSpec sub_noise;
  sub_noise.p_substitute = 0.1;
  auto sub_trip = gen_synthetic_triplets(2000, 40, 8, 12, sub_noise, 6, 6);
  tokens = 0;
  long long subbed = 0;
  for (const auto& t : sub_trip) {
    REQUIRE(t.mt.size() == t.pe.size());
    tokens += static_cast<long long>(t.pe.size());
    for (size_t i = 0; i < t.pe.size(); ++i) subbed += t.mt[i] != t.pe[i];
  }
  double sub_rate = static_cast<double>(subbed) / tokens;
  // a substitution can draw the original token, so correct for 1/content
  double expected = 0.1 * (1.0 - 1.0 / 35.0);
  CHECK(sub_rate > expected * 0.8);
  CHECK(sub_rate < expected * 1.2);
}

TEST_CASE("generation is deterministic given the seed") {
  NoiseSpec noise;
  noise.p_delete = 0.05;
  noise.p_insert = 0.05;
  auto a = gen_synthetic_triplets(200, 30, 1, 15, noise, 777, 777);
  auto b = gen_synthetic_triplets(200, 30, 1, 15, noise, 777, 777);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].src == b[i].src);
    CHECK(a[i].mt == b[i].mt);
    CHECK(a[i].pe == b[i].pe);
  }
  Vocabulary v = synthetic_vocab(30);
  auto pa = temp_path("det_a.tsv");
  auto pb = temp_path("det_b.tsv");
  save_triplets(pa, a, v);
  save_triplets(pb, b, v);
  std::ifstream fa(pa), fb(pb);
  std::string ca((std::istreambuf_iterator<char>(fa)),
                 std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)),
                 std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("splits drawn with different seeds share one cipher") {
  NoiseSpec noise;
  auto train = gen_synthetic_triplets(50, 30, 4, 10, noise, 100, 42);
  auto test = gen_synthetic_triplets(50, 30, 4, 10, noise, 101, 42);
  for (const auto& split : {train, test})
    for (const auto& t : split) CHECK(cipher_decode(t.src, 30, 42) == t.pe);
  // and a different key really is a different language
  auto other = gen_synthetic_triplets(50, 30, 4, 10, noise, 100, 43);
  int differing = 0;
  for (size_t i = 0; i < other.size(); ++i)
    differing += other[i].src != train[i].src;
  CHECK(differing > 40);
}

TEST_CASE("triplet file round trip") {
  NoiseSpec noise;
  noise.p_substitute = 0.2;
  noise.p_insert = 0.05;
  auto triplets = gen_synthetic_triplets(100, 25, 1, 12, noise, 11, 11);
  Vocabulary v = synthetic_vocab(25);
  auto path = temp_path("roundtrip.tsv");
  save_triplets(path, triplets, v);
  auto loaded = load_triplets(path, v);
  REQUIRE(loaded.size() == triplets.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].src == triplets[i].src);
    CHECK(loaded[i].mt == triplets[i].mt);
    CHECK(loaded[i].pe == triplets[i].pe);
    CHECK(loaded[i].ref == triplets[i].ref);
  }
  std::remove(path.c_str());
}

TEST_CASE("malformed line reports its 1-based number") {
  auto path = temp_path("malformed.tsv");
  {
    std::ofstream out(path);
    for (int i = 0; i < 6; ++i) out << "w5\tw6\tw7\n";
    out << "w5\tw6\n";  // line 7: only two fields
  }
  Vocabulary v = synthetic_vocab(10);
  CHECK_THROWS_WITH(load_triplets(path, v), "line 7: expected 3 or 4 fields");
  std::remove(path.c_str());
}

TEST_CASE("out-of-vocabulary tokens map to UNK and are counted") {
  auto path = temp_path("oov.tsv");
  {
    std::ofstream out(path);
    out << "w5 mystery\tw6\tw7\n";
  }
  Vocabulary v = synthetic_vocab(10);
  LoadStats stats;
  auto loaded = load_triplets(path, v, &stats);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].src == Sentence{5, Vocabulary::kUnk});
  CHECK(stats.unk_tokens == 1);
  std::remove(path.c_str());
}

TEST_CASE("oversample_merge lengths and shuffle determinism") {
  NoiseSpec noise;
  auto synthetic = gen_synthetic_triplets(500, 20, 1, 6, noise, 1, 1);
  auto real = gen_synthetic_triplets(23, 20, 1, 6, noise, 2, 2);

  auto merged = oversample_merge(real, synthetic, 20, 99);
  CHECK(merged.size() == 500 + 20 * 23);  // 960

  auto none = oversample_merge({}, synthetic, 20, 99);
  CHECK(none.size() == synthetic.size());
  // permutation of synthetic: sort both multisets of pe sentences
  auto key = [](const Triplet& t) { return t.pe; };
  std::vector<Sentence> a, b;
  for (const auto& t : none) a.push_back(key(t));
  for (const auto& t : synthetic) b.push_back(key(t));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);

  auto once = oversample_merge(real, synthetic, 1, 7);
  CHECK(once.size() == real.size() + synthetic.size());
  std::vector<Sentence> c, d;
  for (const auto& t : once) c.push_back(key(t));
  for (const auto& t : synthetic) d.push_back(key(t));
  for (const auto& t : real) d.push_back(key(t));
  std::sort(c.begin(), c.end());
  std::sort(d.begin(), d.end());
  CHECK(c == d);

  auto again = oversample_merge(real, synthetic, 20, 99);
  REQUIRE(again.size() == merged.size());
  for (size_t i = 0; i < merged.size(); ++i) CHECK(again[i].pe == merged[i].pe);
}
