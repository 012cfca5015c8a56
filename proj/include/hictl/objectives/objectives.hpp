#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hictl/corpus/batch.hpp"
#include "hictl/encoder/encoder.hpp"

namespace hictl::obj {

struct ScoreConfig {
  /// Scores are divided by this before the softmax; 1 leaves cosines as is.
  double temperature = 1.0;
};

/// Contrastive loss of query against one positive and any number of
/// negative keys, scored by cosine. Exactly 0 without negatives.
template <class T>
num::Var info_nce(num::Tape<T>& tp, num::Var query, num::Var positive, std::span<const num::Var> negatives,
                  const ScoreConfig& cfg = {});

template <class T>
T info_nce(const num::Tensor<T>& query, const num::Tensor<T>& positive, std::span<const num::Tensor<T>> negatives,
           const ScoreConfig& cfg = {});

/// Counts recorded by sentence_ctl for instrumentation.
struct SentenceCtlStats {
  int queries = 0;
  std::vector<int> negatives_per_query;
};

/// Batch-level loss over n aligned pairs. Every x_i and y_i is a query whose
/// positive is its partner and whose negatives are the other 2n - 2
/// representations; the sum over all 2n queries is divided by n.
template <class T>
num::Var sentence_ctl(num::Tape<T>& tp, std::span<const num::Var> reprs_x, std::span<const num::Var> reprs_y,
                      const ScoreConfig& cfg = {}, SentenceCtlStats* stats = nullptr);

template <class T>
T sentence_ctl(std::span<const num::Tensor<T>> reprs_x, std::span<const num::Tensor<T>> reprs_y,
               const ScoreConfig& cfg = {});

enum class NegativeWeighting {
  kSoftmax,  // p(w) proportional to exp(cos(q, e(w)))
  kL1,       // p(w) proportional to (cos(q, e(w)) + 1) / 2
};

struct NegativeSet {
  std::vector<int> ids;  // in draw order
  std::uint64_t seed = 0;
};

/// Word ids eligible as negatives: every non-special id not in `bag`.
std::vector<int> negative_candidates(int vocab_size, std::span<const int> bag);

/// Draws min(m, candidates) distinct negatives one at a time, each with
/// probability proportional to its weight among those not yet drawn.
/// Similarities are plain values; nothing here is differentiated.
template <class T>
NegativeSet sample_negatives(std::span<const T> query, const num::Tensor<T>& embeddings, std::span<const int> bag,
                             int m, std::uint64_t seed, NegativeWeighting weighting = NegativeWeighting::kSoftmax);

/// Mean over bag words t of info_nce(query, e(t), {e(s) : s in negatives}),
/// with e the rows of `table`. Throws DegenerateInputError on an empty bag.
template <class T>
num::Var word_ctl(num::Tape<T>& tp, num::Var query, num::Var table, std::span<const int> bag,
                  std::span<const int> negatives, const ScoreConfig& cfg = {});

/// Mean cross-entropy of the tied LM head over every masked position of the
/// given sequences; constant 0 when nothing is masked.
template <class T>
num::Var lm_loss(num::Tape<T>& tp, enc::Encoder<T>& model, std::span<const corpus::MaskedSequence> sequences);

struct ObjectiveConfig {
  ScoreConfig score;
  int negatives_m = 32;
  NegativeWeighting weighting = NegativeWeighting::kSoftmax;
  bool use_lm = true;
  bool use_sentence = true;
  bool use_word = true;
  /// Word-level query from the masked LM input instead of the clean pair.
  bool wctl_on_masked = false;
  /// Word-level query passes through the sentence projection.
  bool shared_projection = true;
};

struct LossBundle {
  double l_lm = 0.0;
  double l_s = 0.0;
  double l_w = 0.0;
  double total = 0.0;
};

struct LossGraph {
  num::Var total, l_lm, l_s, l_w;
  LossBundle values;
  /// Negative set used for each pair; empty for skipped pairs.
  std::vector<std::vector<int>> negatives;
  int skipped_pairs = 0;
};

/// Sum of the LM, sentence-level and word-level losses on one batch. Disabled
/// components contribute a constant 0. `fixed_negatives`, when given,
/// replaces sampling (one list per pair).
template <class T>
LossGraph total_loss(num::Tape<T>& tp, enc::Encoder<T>& model, const corpus::PretrainBatch& batch,
                     const ObjectiveConfig& cfg, std::uint64_t seed,
                     const std::vector<std::vector<int>>* fixed_negatives = nullptr, num::Rng* dropout_rng = nullptr);

}  // namespace hictl::obj
