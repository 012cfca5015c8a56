#include "hictl/nmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hictl/corpus/vocab.hpp"
#include "hictl/error.hpp"

namespace hictl::nmt {

namespace {

using Ngrams = std::map<std::vector<std::string>, int>;

Ngrams count_ngrams(const std::vector<std::string>& toks, int n) {
  Ngrams out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return out;
}

}  // namespace

BleuResult corpus_bleu(std::span<const std::vector<std::string>> hyps, std::span<const std::vector<std::string>> refs,
                       int max_ngram) {
  if (hyps.empty()) throw DataError("BLEU of an empty corpus");
  if (hyps.size() != refs.size()) {
    throw DataError("BLEU: " + std::to_string(hyps.size()) + " hypotheses vs " + std::to_string(refs.size()) +
                    " references");
  }
  if (max_ngram < 1) throw ConfigError("BLEU max_ngram must be >= 1");
  BleuResult res;
  std::vector<double> matched(static_cast<std::size_t>(max_ngram)), total(static_cast<std::size_t>(max_ngram));
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    res.hyp_length += hyps[s].size();
    res.ref_length += refs[s].size();
    for (int n = 1; n <= max_ngram; ++n) {
      const Ngrams h = count_ngrams(hyps[s], n);
      const Ngrams r = count_ngrams(refs[s], n);
      for (const auto& [gram, c] : h) {
        total[static_cast<std::size_t>(n - 1)] += c;
        if (auto it = r.find(gram); it != r.end()) matched[static_cast<std::size_t>(n - 1)] += std::min(c, it->second);
      }
    }
  }
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < max_ngram; ++n) {
    const double p = total[static_cast<std::size_t>(n)] > 0 ? matched[static_cast<std::size_t>(n)] / total[static_cast<std::size_t>(n)] : 0.0;
    res.precisions.push_back(p);
    if (p <= 0.0) zero = true;
    else log_sum += std::log(p);
  }
  const double c = static_cast<double>(res.hyp_length), r = static_cast<double>(res.ref_length);
  res.brevity_penalty = c == 0.0 ? 0.0 : (c < r ? std::exp(1.0 - r / c) : 1.0);
  res.bleu = zero ? 0.0 : 100.0 * res.brevity_penalty * std::exp(log_sum / max_ngram);
  return res;
}

BleuResult corpus_bleu(std::span<const std::string> hyps, std::span<const std::string> refs, int max_ngram) {
  auto split = [](std::span<const std::string> lines) {
    std::vector<std::vector<std::string>> out;
    for (const auto& l : lines) {
      std::vector<std::string> toks;
      for (auto w : corpus::split_whitespace(l)) toks.emplace_back(w);
      out.push_back(std::move(toks));
    }
    return out;
  };
  const auto h = split(hyps);
  const auto r = split(refs);
  return corpus_bleu(std::span<const std::vector<std::string>>(h), std::span<const std::vector<std::string>>(r), max_ngram);
}

}  // namespace hictl::nmt
