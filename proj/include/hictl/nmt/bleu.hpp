#pragma once

#include <span>
#include <string>
#include <vector>

namespace hictl::nmt {

struct BleuResult {
  double bleu = 0.0;  // percentage
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

/// Corpus BLEU with one reference per hypothesis: clipped n-gram counts are
/// pooled over the corpus, any zero precision gives 0, and the brevity
/// penalty is exp(1 - r/c) when c < r. Throws DataError on an empty corpus
/// or unequal counts.
BleuResult corpus_bleu(std::span<const std::vector<std::string>> hypotheses,
                       std::span<const std::vector<std::string>> references, int max_ngram = 4);

/// Whitespace-tokenised convenience form.
BleuResult corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                       int max_ngram = 4);

}  // namespace hictl::nmt
