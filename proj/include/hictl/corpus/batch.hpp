#pragma once

#include <cstdint>
#include <vector>

#include "hictl/corpus/corpus.hpp"

namespace hictl::corpus {

struct PretrainExample {
  std::vector<int> x;  // truncated, no specials
  std::vector<int> y;
  bool is_parallel = true;
  /// [CLS] x [SEP] y [SEP], unmasked.
  std::vector<int> concat;
  /// Input of the LM objective: the masked concatenation for parallel pairs
  /// (TLM) and the masked [CLS] x [SEP] otherwise (MLM).
  MaskedSequence lm;
  /// Sorted unique non-special ids of x and y.
  std::vector<int> bag;
};

struct PretrainBatch {
  std::vector<PretrainExample> examples;
  std::size_t size() const { return examples.size(); }
};

/// [CLS] tokens [SEP]
std::vector<int> with_cls(std::span<const int> tokens);
/// [CLS] x [SEP] y [SEP]
std::vector<int> concat_pair(std::span<const int> x, std::span<const int> y);
/// Sorted unique non-special ids over both sequences.
std::vector<int> bag_of_words(std::span<const int> x, std::span<const int> y);

PretrainExample make_example(SentencePair pair, int max_seq_len, double mask_rate, int vocab_size,
                             std::uint64_t seed);

/// Draws n distinct pairs from the source, truncates each side to
/// (max_seq_len - 3) / 2 tokens, masks and computes bags. Throws DataError
/// when the source holds fewer than n pairs.
PretrainBatch make_pretrain_batch(const PairSource& source, int n, std::uint64_t seed, int max_seq_len,
                                  double mask_rate, int vocab_size);

}  // namespace hictl::corpus
