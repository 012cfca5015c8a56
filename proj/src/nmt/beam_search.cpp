#include "hictl/nmt/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "hictl/error.hpp"

namespace hictl::nmt {

namespace {

struct Candidate {
  int parent;
  int token;
  double log_prob;
};

bool hypothesis_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

double normalized_score(double log_prob, std::size_t length, double length_penalty) {
  return log_prob / std::pow(static_cast<double>(length), length_penalty);
}

std::vector<Hypothesis> beam_search(StepScorer& scorer, const BeamConfig& cfg) {
  if (cfg.width < 1) throw ConfigError("beam width must be >= 1");
  if (cfg.max_len < 1) throw ConfigError("max_len must be >= 1");
  const int vocab = scorer.vocab_size();
  if (cfg.eos < 0 || cfg.eos >= vocab) throw ConfigError("end token outside the vocabulary");
  const auto width = static_cast<std::size_t>(cfg.width);

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (int t = 0; t < cfg.max_len && !live.empty() && finished.size() < width; ++t) {
    const bool force_eos = t == cfg.max_len - 1;
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const auto lp = scorer.log_probs(live[b].tokens);
      if (static_cast<int>(lp.size()) != vocab) throw DimError("scorer returned wrong number of log-probabilities");
      for (int w = 0; w < vocab; ++w) {
        if (force_eos && w != cfg.eos) continue;
        const double s = live[b].log_prob + lp[static_cast<std::size_t>(w)];
        if (std::isnan(s) || s == -INFINITY) continue;
        cands.push_back({static_cast<int>(b), w, s});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(b.log_prob, a.parent, a.token) < std::tie(a.log_prob, b.parent, b.token);
    });
    std::vector<Hypothesis> next;
    for (std::size_t r = 0; r < cands.size(); ++r) {
      const Candidate& c = cands[r];
      Hypothesis h = live[static_cast<std::size_t>(c.parent)];
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      if (c.token == cfg.eos) {
        if (r < width) {
          h.score = normalized_score(h.log_prob, h.tokens.size(), cfg.length_penalty);
          finished.push_back(std::move(h));
        }
      } else if (next.size() < width) {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  return finished;
}

}  // namespace hictl::nmt
