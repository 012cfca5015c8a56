#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hictl/corpus/corpus.hpp"
#include "hictl/encoder/encoder.hpp"
#include "hictl/objectives/objectives.hpp"

namespace hictl::train {

/// sentence_repr of [CLS] tokens [SEP] for every sentence, truncated to fit
/// the encoder. Sentences are processed in parallel.
std::vector<num::Tensor<float>> embed_sentences(enc::Encoder<float>& model, std::span<const std::vector<int>> sentences);

struct RetrievalResult {
  int pairs = 0;
  double accuracy_x2y = 0.0;
  double accuracy_y2x = 0.0;
  /// Mean of cos(query, partner) - max over other candidates.
  double margin_x2y = 0.0;
  double margin_y2x = 0.0;
};

/// Top-1 cosine retrieval of each x_i among all y_j and vice versa.
/// Throws DataError with fewer than 2 pairs.
RetrievalResult eval_retrieval(enc::Encoder<float>& model, std::span<const corpus::SentencePair> pairs);

/// Probability that a positive outscores a negative; ties count half.
double pairwise_auc(std::span<const double> positive, std::span<const double> negative);

struct WordAucResult {
  int pairs = 0;
  double mean_auc = 0.0;
};

/// Per pair: scores cos(q, e(w)) of the word-level query against the bag of
/// words and against m sampled negatives, and reports their pairwise AUC.
WordAucResult eval_word_auc(enc::Encoder<float>& model, std::span<const corpus::SentencePair> pairs, int m,
                            std::uint64_t seed, const obj::ObjectiveConfig& cfg = {});

}  // namespace hictl::train
