#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "hictl/corpus/batch.hpp"
#include "hictl/corpus/corpus.hpp"
#include "hictl/error.hpp"
#include "test_support.hpp"

using namespace hictl;
using namespace hictl::corpus;
using hictl::testing::ref_below;
using hictl::testing::ref_uniform;
using hictl::testing::TempDir;
using hictl::testing::write_text;

namespace {

std::vector<std::filesystem::path> one_file(const TempDir& dir, const std::string& name, const std::string& text) {
  write_text(dir / name, text);
  return {dir / name};
}

// Reference selection: keep a pool of candidates and move the drawn one to
// the front block, exactly a partial Fisher-Yates shuffle.
std::vector<std::size_t> ref_select(std::mt19937_64& g, std::vector<std::size_t> pool, std::size_t k) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + ref_below(g, pool.size() - i);
    std::swap(pool[i], pool[j]);
    chosen.push_back(pool[i]);
  }
  return chosen;
}

std::vector<std::string> ref_perturb(const std::vector<std::string>& tokens, double rate, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(tokens.size()) - 1e-9));
  if (k < 2) return tokens;
  std::mt19937_64 g(seed);
  std::vector<std::size_t> pool(tokens.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  const auto cycle = ref_select(g, pool, k);
  auto out = tokens;
  for (std::size_t j = 0; j < k; ++j) out[cycle[(j + 1) % k]] = tokens[cycle[j]];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

TEST(Vocab, CountOrderingAndSpecials) {
  TempDir dir;
  const auto v = build_vocab(one_file(dir, "c.txt", "a b a\n"), 1);
  ASSERT_EQ(v.size(), kNumSpecials + 2);
  EXPECT_EQ(v.token(kNumSpecials), "a");
  EXPECT_EQ(v.token(kNumSpecials + 1), "b");
  for (int i = 0; i < kNumSpecials; ++i) EXPECT_EQ(v.token(i), kSpecialTokens[static_cast<std::size_t>(i)]);
}

TEST(Vocab, MinCountThreshold) {
  TempDir dir;
  const auto v = build_vocab(one_file(dir, "c.txt", "a b a\n"), 2);
  EXPECT_EQ(v.size(), kNumSpecials + 1);
  EXPECT_EQ(v.token(kNumSpecials), "a");
  EXPECT_EQ(v.id("b"), kUnk);
}

TEST(Vocab, TiesAreLexicographic) {
  TempDir dir;
  const auto v = build_vocab(one_file(dir, "c.txt", "zeta alpha mid\nmid\n"), 1);
  EXPECT_EQ(v.token(kNumSpecials), "mid");
  EXPECT_EQ(v.token(kNumSpecials + 1), "alpha");
  EXPECT_EQ(v.token(kNumSpecials + 2), "zeta");
}

TEST(Vocab, SharedInventoryAcrossFiles) {
  TempDir dir;
  write_text(dir / "x.txt", "hello world\n");
  write_text(dir / "y.tsv", "привет\tмир\n");
  const std::vector<std::filesystem::path> files{dir / "x.txt", dir / "y.tsv"};
  const auto v = build_vocab(files, 1);
  EXPECT_EQ(v.word_count(), 4);
  for (const char* w : {"hello", "world", "привет", "мир"}) EXPECT_NE(v.id(w), kUnk) << w;
}

TEST(Vocab, SpecialSpellingsNeverTokenize) {
  TempDir dir;
  const auto v = build_vocab(one_file(dir, "c.txt", "[CLS] a [SEP] [MASK]\n"), 1);
  EXPECT_EQ(v.word_count(), 1);
  const auto ids = v.encode("[CLS] a [MASK]");
  EXPECT_EQ(ids, (std::vector<int>{kUnk, kNumSpecials, kUnk}));
}

TEST(Vocab, Errors) {
  TempDir dir;
  EXPECT_THROW(build_vocab(std::vector<std::filesystem::path>{}, 1), DataError);
  EXPECT_THROW(build_vocab(std::vector<std::filesystem::path>{dir / "missing.txt"}, 1), DataError);
  EXPECT_THROW(build_vocab(one_file(dir, "empty.txt", "\n  \n"), 1), DataError);
}

TEST(Vocab, EncodeDecodeRoundTrip) {
  const auto v = Vocabulary::from_words(std::vector<std::string>{"x", "y"});
  const auto ids = v.encode("  y x\ty ");
  EXPECT_EQ(v.decode(ids), "y x y");
  EXPECT_THROW(v.token(99), DataError);
}

// ---------------------------------------------------------------------------
// Perturbation

TEST(Perturb, ZeroRateAndSingleTokenAreIdentity) {
  const std::vector<std::string> t{"a", "b", "c"};
  EXPECT_EQ(perturb<std::string>(t, 0.0, 5), t);
  const std::vector<std::string> one{"a"};
  EXPECT_EQ(perturb<std::string>(one, 1.0, 5), one);
}

TEST(Perturb, SeededOracle) {
  const std::vector<std::string> t{"a", "b", "c", "d"};
  const auto got = perturb<std::string>(t, 0.5, 7);
  EXPECT_EQ(got, ref_perturb(t, 0.5, 7));
  EXPECT_NE(got, t);  // two distinct tokens in the cycle always move
}

TEST(Perturb, OracleAgreesAcrossRatesAndSeeds) {
  const std::vector<std::string> t{"p", "q", "r", "s", "t", "u", "v", "w", "x", "y"};
  for (double rate : {0.1, 0.3, 0.5, 0.77, 1.0}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ASSERT_EQ(perturb<std::string>(t, rate, seed), ref_perturb(t, rate, seed)) << rate << " " << seed;
    }
  }
}

TEST(Perturb, AlwaysAPermutation) {
  num::Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> t(1 + rng.below(20));
    for (auto& v : t) v = static_cast<int>(rng.below(5));
    const double rate = rng.uniform();
    auto p = perturb<int>(t, rate, trial);
    EXPECT_TRUE(std::is_permutation(p.begin(), p.end(), t.begin(), t.end()));
    EXPECT_EQ(p, perturb<int>(t, rate, trial));
  }
}

TEST(Perturb, SelectedCountToleratesRounding) {
  EXPECT_EQ(selected_count(0.3, 10), 3u);
  EXPECT_EQ(selected_count(0.15, 10), 2u);
  EXPECT_EQ(selected_count(1.0, 4), 4u);
  EXPECT_EQ(selected_count(0.0, 4), 0u);
}

// ---------------------------------------------------------------------------
// Masking

TEST(Masking, ZeroRateSelectsNothing) {
  const std::vector<int> s{kCls, 10, 11, kSep};
  const auto m = apply_masking(s, 0.0, 1, 20);
  EXPECT_TRUE(m.positions.empty());
  EXPECT_EQ(m.tokens, s);
}

TEST(Masking, AllSpecialIsAnError) {
  const std::vector<int> s{kCls, kSep, kSep};
  EXPECT_THROW(apply_masking(s, 0.5, 1, 20), DataError);
}

TEST(Masking, SeededOracleOnTenTokens) {
  const int vocab = 40;
  const std::vector<int> s{10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  const auto got = apply_masking(s, 0.15, 3, vocab);

  std::mt19937_64 g(3);
  std::vector<std::size_t> pool(s.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  auto chosen = ref_select(g, pool, 2);  // ceil(0.15 * 10)
  std::sort(chosen.begin(), chosen.end());
  std::vector<int> tokens = s;
  for (auto p : chosen) {
    const double u = ref_uniform(g);
    if (u < 0.8) tokens[p] = kMask;
    else if (u < 0.9) tokens[p] = kNumSpecials + static_cast<int>(ref_below(g, vocab - kNumSpecials));
  }
  ASSERT_EQ(got.positions.size(), 2u);
  EXPECT_EQ(got.positions[0], static_cast<int>(chosen[0]));
  EXPECT_EQ(got.positions[1], static_cast<int>(chosen[1]));
  EXPECT_EQ(got.tokens, tokens);
  EXPECT_EQ(got.labels, (std::vector<int>{s[chosen[0]], s[chosen[1]]}));
}

TEST(Masking, NeverTouchesSpecialsAndFractionIsExact) {
  num::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> s{kCls};
    const int n = 1 + static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) s.push_back(kNumSpecials + static_cast<int>(rng.below(50)));
    s.push_back(kSep);
    const double rate = 0.05 + 0.9 * rng.uniform();
    const auto m = apply_masking(s, rate, trial, 57);
    EXPECT_EQ(m.positions.size(), selected_count(rate, static_cast<std::size_t>(n)));
    EXPECT_TRUE(std::is_sorted(m.positions.begin(), m.positions.end()));
    for (std::size_t k = 0; k < m.positions.size(); ++k) {
      const auto p = static_cast<std::size_t>(m.positions[k]);
      EXPECT_FALSE(is_special(s[p]));
      EXPECT_EQ(m.labels[k], s[p]);
    }
    EXPECT_EQ(m.tokens.front(), kCls);
    EXPECT_EQ(m.tokens.back(), kSep);
  }
}

TEST(Masking, ReplacementProportions) {
  std::vector<int> s(1000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = kNumSpecials + static_cast<int>(i % 50);
  std::map<std::string, int> counts;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = apply_masking(s, 0.5, seed, 57);
    for (std::size_t k = 0; k < m.positions.size(); ++k) {
      const int t = m.tokens[static_cast<std::size_t>(m.positions[k])];
      counts[t == kMask ? "mask" : (t == m.labels[k] ? "kept" : "random")]++;
    }
  }
  const double total = 10000.0;
  EXPECT_NEAR(counts["mask"] / total, 0.8, 0.02);
  // A random replacement equals the original 1 time in 50, so "kept" is
  // slightly above 10%.
  EXPECT_NEAR(counts["random"] / total, 0.1 * 49 / 50, 0.015);
  EXPECT_NEAR(counts["kept"] / total, 0.1 + 0.1 / 50, 0.015);
}

// ---------------------------------------------------------------------------
// Batches

TEST(Batch, BagOfWordsExamples) {
  const auto v = Vocabulary::from_words(std::vector<std::string>{"a", "b", "c", "d"});
  EXPECT_EQ(bag_of_words(v.encode("a b"), v.encode("c d")).size(), 4u);
  const auto dedup = bag_of_words(v.encode("a a"), v.encode("a"));
  ASSERT_EQ(dedup.size(), 1u);
  EXPECT_EQ(dedup[0], v.id("a"));
}

TEST(Batch, SinglePairBatch) {
  const auto v = Vocabulary::from_words(std::vector<std::string>{"a", "b", "c", "d"});
  const std::vector<TextPair> text{{"a b", "c d"}};
  ParallelSource src(text, v);
  const auto b = make_pretrain_batch(src, 1, 5, 64, 0.15, v.size());
  ASSERT_EQ(b.size(), 1u);
  const auto& ex = b.examples[0];
  EXPECT_EQ(ex.bag, (std::vector<int>{v.id("a"), v.id("b"), v.id("c"), v.id("d")}));
  EXPECT_EQ(ex.concat, (std::vector<int>{kCls, v.id("a"), v.id("b"), kSep, v.id("c"), v.id("d"), kSep}));
  EXPECT_EQ(ex.lm.positions.size(), 1u);  // ceil(0.15 * 4)
}

TEST(Batch, DeterministicAndDistinct) {
  const auto synth = synth_bilingual(60, 30, MappingKind::kBijectiveReverse, 4);
  ParallelSource src(synth.pairs, synth.vocab);
  const auto a = make_pretrain_batch(src, 8, 77, 32, 0.15, synth.vocab.size());
  const auto b = make_pretrain_batch(src, 8, 77, 32, 0.15, synth.vocab.size());
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.examples[i].concat, b.examples[i].concat);
    EXPECT_EQ(a.examples[i].lm.tokens, b.examples[i].lm.tokens);
    EXPECT_EQ(a.examples[i].bag, b.examples[i].bag);
  }
  std::vector<std::vector<int>> xs;
  for (const auto& ex : a.examples) xs.push_back(ex.concat);
  std::sort(xs.begin(), xs.end());
  // Pairs are drawn without replacement; identical texts are possible but
  // vanishingly unlikely on this corpus.
  EXPECT_EQ(std::unique(xs.begin(), xs.end()), xs.end());
}

TEST(Batch, TruncationAndInvariants) {
  const auto synth = synth_bilingual(60, 50, MappingKind::kBijective, 8, {10, 20});
  ParallelSource src(synth.pairs, synth.vocab);
  const int max_len = 17;  // 7 tokens per side
  const auto b = make_pretrain_batch(src, 20, 3, max_len, 0.3, synth.vocab.size());
  for (const auto& ex : b.examples) {
    EXPECT_LE(ex.x.size(), 7u);
    EXPECT_LE(ex.y.size(), 7u);
    EXPECT_LE(static_cast<int>(ex.concat.size()), max_len);
    EXPECT_LE(ex.bag.size(), ex.x.size() + ex.y.size());
    for (int w : ex.bag) {
      EXPECT_FALSE(is_special(w));
      EXPECT_LT(w, synth.vocab.size());
    }
    for (int p : ex.lm.positions) EXPECT_FALSE(is_special(ex.concat[static_cast<std::size_t>(p)]));
  }
}

TEST(Batch, MonolingualPairsUseMlmInput) {
  MonolingualSource src({{10, 11, 12, 13}}, 0.5);
  const auto b = make_pretrain_batch(src, 1, 2, 64, 0.5, 20);
  const auto& ex = b.examples[0];
  EXPECT_FALSE(ex.is_parallel);
  EXPECT_TRUE(std::is_permutation(ex.x.begin(), ex.x.end(), ex.y.begin()));
  EXPECT_EQ(ex.lm.tokens.size(), ex.x.size() + 2);  // [CLS] x [SEP]
}

TEST(Batch, ExhaustedSourceIsAnError) {
  MonolingualSource src({{10, 11}}, 0.3);
  EXPECT_THROW(make_pretrain_batch(src, 2, 1, 64, 0.15, 20), DataError);
}

// ---------------------------------------------------------------------------
// Synthetic corpora and files

TEST(Synth, IdentityMappingCopies) {
  const auto c = synth_bilingual(30, 20, MappingKind::kIdentity, 1);
  for (const auto& p : c.pairs) EXPECT_EQ(p.source, p.target);
}

TEST(Synth, MapReverseConstruction) {
  const std::vector<std::string> from{"t1", "t2"}, to{"u1", "u2"};
  const std::vector<int> mapping{0, 1};
  const std::vector<std::string> x{"t1", "t2"};
  EXPECT_EQ(translate_tokens(x, from, to, mapping, true), (std::vector<std::string>{"u2", "u1"}));
  EXPECT_EQ(translate_tokens(x, from, to, mapping, false), (std::vector<std::string>{"u1", "u2"}));
}

TEST(Synth, MapReverseIsConsistentAndDeterministic) {
  const auto c = synth_bilingual(200, 100, MappingKind::kBijectiveReverse, 11);
  const auto d = synth_bilingual(200, 100, MappingKind::kBijectiveReverse, 11);
  ASSERT_EQ(c.pairs.size(), 100u);
  EXPECT_LE(c.vocab.size(), 200);
  std::vector<int> seen(c.mapping.size(), 0);
  for (int m : c.mapping) seen[static_cast<std::size_t>(m)]++;
  for (int s : seen) EXPECT_EQ(s, 1);  // bijection
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    EXPECT_EQ(c.pairs[i].source, d.pairs[i].source);
    EXPECT_EQ(c.pairs[i].target, d.pairs[i].target);
    const auto xs = split_whitespace(c.pairs[i].source);
    const auto ys = split_whitespace(c.pairs[i].target);
    ASSERT_EQ(xs.size(), ys.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const int a = std::stoi(std::string(xs[t].substr(1)));
      EXPECT_EQ(ys[ys.size() - 1 - t], "b" + std::to_string(c.mapping[static_cast<std::size_t>(a)]));
    }
  }
}

TEST(Synth, InvalidArguments) {
  EXPECT_THROW(synth_bilingual(kNumSpecials, 5, MappingKind::kBijective, 1), ConfigError);
  EXPECT_THROW(parse_mapping_kind("shuffle"), ConfigError);
  EXPECT_EQ(parse_mapping_kind("bijective-map"), MappingKind::kBijective);
}

TEST(Files, ParallelRoundTripAndErrors) {
  TempDir dir;
  const std::vector<TextPair> pairs{{"a b", "c"}, {"d", "e f"}};
  write_parallel(dir / "p.tsv", pairs);
  const auto back = read_parallel(dir / "p.tsv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].target, "e f");
  write_text(dir / "bad.tsv", "no tab here\n");
  EXPECT_THROW(read_parallel(dir / "bad.tsv"), DataError);
  EXPECT_THROW(read_parallel(dir / "missing.tsv"), DataError);
}

TEST(Files, ConcatSourceIndexesInOrder) {
  auto a = std::make_shared<ParallelSource>(std::vector<SentencePair>{{{10}, {11}, true}});
  auto b = std::make_shared<MonolingualSource>(std::vector<std::vector<int>>{{12, 13}}, 0.0);
  ConcatSource c({a, b});
  EXPECT_EQ(c.size(), 2u);
  EXPECT_TRUE(c.pair(0, 0).is_parallel);
  EXPECT_FALSE(c.pair(1, 0).is_parallel);
  EXPECT_THROW(c.pair(2, 0), DataError);
}
