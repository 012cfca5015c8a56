#include "hictl/corpus/batch.hpp"

#include <algorithm>
#include <unordered_map>

#include "hictl/error.hpp"

namespace hictl::corpus {

std::vector<int> with_cls(std::span<const int> tokens) {
  std::vector<int> out;
  out.reserve(tokens.size() + 2);
  out.push_back(kCls);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.push_back(kSep);
  return out;
}

std::vector<int> concat_pair(std::span<const int> x, std::span<const int> y) {
  std::vector<int> out = with_cls(x);
  out.insert(out.end(), y.begin(), y.end());
  out.push_back(kSep);
  return out;
}

std::vector<int> bag_of_words(std::span<const int> x, std::span<const int> y) {
  std::vector<int> out;
  for (int t : x) if (!is_special(t)) out.push_back(t);
  for (int t : y) if (!is_special(t)) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PretrainExample make_example(SentencePair pair, int max_seq_len, double mask_rate, int vocab_size,
                             std::uint64_t seed) {
  const int side = (max_seq_len - 3) / 2;
  if (side < 1) throw ConfigError("max_seq_len " + std::to_string(max_seq_len) + " leaves no room for tokens");
  if (pair.x.empty() || pair.y.empty()) throw DataError("sentence pair with an empty side");
  if (static_cast<int>(pair.x.size()) > side) pair.x.resize(static_cast<std::size_t>(side));
  if (static_cast<int>(pair.y.size()) > side) pair.y.resize(static_cast<std::size_t>(side));
  PretrainExample ex;
  ex.concat = concat_pair(pair.x, pair.y);
  ex.bag = bag_of_words(pair.x, pair.y);
  const std::vector<int> lm_input = pair.is_parallel ? ex.concat : with_cls(pair.x);
  ex.lm = apply_masking(lm_input, mask_rate, seed, vocab_size);
  ex.x = std::move(pair.x);
  ex.y = std::move(pair.y);
  ex.is_parallel = pair.is_parallel;
  return ex;
}

PretrainBatch make_pretrain_batch(const PairSource& source, int n, std::uint64_t seed, int max_seq_len,
                                  double mask_rate, int vocab_size) {
  if (n < 1) throw ConfigError("batch size must be >= 1");
  const std::size_t total = source.size();
  if (total < static_cast<std::size_t>(n)) {
    throw DataError("pair source holds " + std::to_string(total) + " pairs, batch needs " + std::to_string(n));
  }
  num::Rng rng(num::derive_seed(seed, {0xba7c}));
  // Partial Fisher-Yates over indices, sparse so large sources stay cheap.
  std::vector<std::size_t> picked;
  std::unordered_map<std::size_t, std::size_t> swapped;
  auto at = [&](std::size_t i) { auto it = swapped.find(i); return it == swapped.end() ? i : it->second; };
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    const std::size_t j = i + rng.below(total - i);
    const std::size_t vi = at(i), vj = at(j);
    swapped[i] = vj;
    swapped[j] = vi;
    picked.push_back(vj);
  }
  PretrainBatch batch;
  batch.examples.reserve(picked.size());
  for (std::size_t k = 0; k < picked.size(); ++k) {
    SentencePair p = source.pair(picked[k], num::derive_seed(seed, {0x9e27, k}));
    batch.examples.push_back(
        make_example(std::move(p), max_seq_len, mask_rate, vocab_size, num::derive_seed(seed, {0x3a5c, k})));
  }
  return batch;
}

}  // namespace hictl::corpus
