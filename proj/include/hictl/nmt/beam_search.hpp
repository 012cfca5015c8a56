#pragma once

#include <span>
#include <vector>

namespace hictl::nmt {

/// Next-token log-probabilities given the tokens generated so far.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::vector<double> log_probs(std::span<const int> prefix) = 0;
};

struct BeamConfig {
  int width = 4;
  double length_penalty = 0.6;
  /// Longest output including the end token, which is forced at this length.
  int max_len = 64;
  int eos = 6;
};

struct Hypothesis {
  std::vector<int> tokens;  // ends with eos
  double log_prob = 0.0;
  double score = 0.0;  // log_prob / len^length_penalty
};

/// Length-normalised beam search. At each step all extensions of the live
/// beams are ranked by cumulative log-probability; end-token extensions
/// ranked within the top `width` are finished, and the best `width` other
/// extensions stay live. Stops when `width` hypotheses are finished, no
/// beam is live, or max_len is reached. Results are ordered best first,
/// ties broken by token sequence.
std::vector<Hypothesis> beam_search(StepScorer& scorer, const BeamConfig& cfg);

/// Score used to rank finished hypotheses.
double normalized_score(double log_prob, std::size_t length, double length_penalty);

}  // namespace hictl::nmt
