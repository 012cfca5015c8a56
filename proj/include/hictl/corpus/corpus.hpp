#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hictl/corpus/vocab.hpp"
#include "hictl/numerics/rng.hpp"

namespace hictl::corpus {

struct TextPair {
  std::string source;
  std::string target;
};

/// ⟨x, y⟩: y is a translation of x, or (is_parallel == false) a reordering of it.
struct SentencePair {
  std::vector<int> x;
  std::vector<int> y;
  bool is_parallel = true;
};

/// One pair per line, source and target separated by a tab.
std::vector<TextPair> read_parallel(const std::filesystem::path& path);
void write_parallel(const std::filesystem::path& path, std::span<const TextPair> pairs);
/// One sentence per line; blank lines are skipped.
std::vector<std::string> read_monolingual(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

/// Number of items a fraction selects: ceil(rate * n), tolerant of rounding
/// noise such as 0.3 * 10 = 3.0000000000000004.
inline std::size_t selected_count(double rate, std::size_t n) {
  if (rate <= 0.0 || n == 0) return 0;
  const double raw = rate * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

/// Picks ceil(rate * len) positions without replacement and rotates the
/// tokens along that random cycle, so the result is a permutation of the
/// input that differs from it whenever two selected tokens differ.
template <class Token>
std::vector<Token> perturb(std::span<const Token> tokens, double rate, std::uint64_t seed) {
  std::vector<Token> out(tokens.begin(), tokens.end());
  const std::size_t k = selected_count(rate, out.size());
  if (k < 2) return out;
  num::Rng rng(seed);
  std::vector<std::size_t> pos(out.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pos[i], pos[i + rng.below(pos.size() - i)]);
  // Token at pos[j] moves to pos[j + 1], wrapping around.
  for (std::size_t j = 0; j < k; ++j) out[pos[(j + 1) % k]] = tokens[pos[j]];
  return out;
}

struct MaskedSequence {
  std::vector<int> tokens;     // after replacement
  std::vector<int> positions;  // ascending
  std::vector<int> labels;     // original ids at `positions`
};

/// BERT-style masking of ceil(mask_rate * eligible) non-special positions:
/// 80% become [MASK], 10% a random word id, 10% stay unchanged. Throws
/// DataError when the sequence has no non-special token.
MaskedSequence apply_masking(std::span<const int> sequence, double mask_rate, std::uint64_t seed,
                             int vocab_size);

// ---------------------------------------------------------------------------
// Synthetic bilingual corpora.

enum class MappingKind { kIdentity, kBijective, kBijectiveReverse };

MappingKind parse_mapping_kind(std::string_view name);
std::string_view to_string(MappingKind kind);

struct SynthOptions {
  int min_len = 4;
  int max_len = 10;
};

struct SynthCorpus {
  Vocabulary vocab;
  std::vector<TextPair> pairs;
  /// word_a index -> word_b index
  std::vector<int> mapping;
};

/// Applies a token mapping, then reverses the sequence if requested.
std::vector<std::string> translate_tokens(std::span<const std::string> tokens,
                                          const std::vector<std::string>& from_words,
                                          const std::vector<std::string>& to_words,
                                          const std::vector<int>& mapping, bool reverse);

/// Language A sentences are uniform random draws over words a0..a{k-1};
/// language B applies a fixed random bijection onto b0..b{k-1} (reversed
/// for kBijectiveReverse). kIdentity copies A. The vocabulary holds
/// specials plus every word, so its size is at most vocab_size.
SynthCorpus synth_bilingual(int vocab_size, int n_pairs, MappingKind kind, std::uint64_t seed,
                            const SynthOptions& opts = {});

// ---------------------------------------------------------------------------
// Sources of training pairs.

class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  /// Pair `index`; `seed` drives any randomness such as perturbation.
  virtual SentencePair pair(std::size_t index, std::uint64_t seed) const = 0;
};

class ParallelSource : public PairSource {
 public:
  explicit ParallelSource(std::vector<SentencePair> pairs) : pairs_(std::move(pairs)) {}
  ParallelSource(std::span<const TextPair> pairs, const Vocabulary& vocab);
  std::size_t size() const override { return pairs_.size(); }
  SentencePair pair(std::size_t index, std::uint64_t seed) const override;
  const std::vector<SentencePair>& pairs() const { return pairs_; }

 private:
  std::vector<SentencePair> pairs_;
};

/// Monolingual sentences paired with a reordered copy of themselves.
class MonolingualSource : public PairSource {
 public:
  MonolingualSource(std::vector<std::vector<int>> sentences, double perturb_rate);
  std::size_t size() const override { return sentences_.size(); }
  SentencePair pair(std::size_t index, std::uint64_t seed) const override;

 private:
  std::vector<std::vector<int>> sentences_;
  double perturb_rate_;
};

/// Concatenation of several sources, indexed in order.
class ConcatSource : public PairSource {
 public:
  explicit ConcatSource(std::vector<std::shared_ptr<const PairSource>> parts);
  std::size_t size() const override { return total_; }
  SentencePair pair(std::size_t index, std::uint64_t seed) const override;

 private:
  std::vector<std::shared_ptr<const PairSource>> parts_;
  std::size_t total_ = 0;
};

}  // namespace hictl::corpus
