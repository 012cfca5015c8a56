#include "hictl/trainer/evaluation.hpp"

#include <algorithm>
#include <limits>

#include "hictl/corpus/batch.hpp"
#include "hictl/error.hpp"
#include "hictl/numerics/functions.hpp"
#include "hictl/parallel.hpp"

namespace hictl::train {

namespace {

std::vector<int> clip(std::span<const int> tokens, int max_len) {
  const auto n = std::min(tokens.size(), static_cast<std::size_t>(std::max(max_len, 0)));
  return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n)};
}

struct DirectionStats {
  double accuracy;
  double margin;
};

DirectionStats retrieve(const std::vector<num::Tensor<float>>& queries, const std::vector<num::Tensor<float>>& keys) {
  const std::size_t n = queries.size();
  std::vector<int> hit(n);
  std::vector<double> margin(n);
  parallel_for(n, [&](std::size_t i) {
    double best_other = -std::numeric_limits<double>::infinity();
    double pos = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = num::cosine(queries[i], keys[j]);
      if (j == i) pos = c;
      else best_other = std::max(best_other, c);
    }
    hit[i] = pos > best_other ? 1 : 0;
    margin[i] = pos - best_other;
  });
  double acc = 0.0, mar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += hit[i];
    mar += margin[i];
  }
  return {acc / static_cast<double>(n), mar / static_cast<double>(n)};
}

}  // namespace

std::vector<num::Tensor<float>> embed_sentences(enc::Encoder<float>& model, std::span<const std::vector<int>> sentences) {
  std::vector<num::Tensor<float>> out(sentences.size());
  const int room = model.config().max_seq_len - 2;
  parallel_for(sentences.size(), [&](std::size_t i) {
    out[i] = model.sentence_repr(corpus::with_cls(clip(sentences[i], room)));
  });
  return out;
}

RetrievalResult eval_retrieval(enc::Encoder<float>& model, std::span<const corpus::SentencePair> pairs) {
  if (pairs.size() < 2) throw DataError("retrieval evaluation needs at least 2 pairs");
  std::vector<std::vector<int>> xs, ys;
  for (const auto& p : pairs) {
    if (p.x.empty() || p.y.empty()) throw DataError("retrieval corpus contains an empty sentence");
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const auto rx = embed_sentences(model, xs);
  const auto ry = embed_sentences(model, ys);
  const auto fwd = retrieve(rx, ry);
  const auto bwd = retrieve(ry, rx);
  return {static_cast<int>(pairs.size()), fwd.accuracy, bwd.accuracy, fwd.margin, bwd.margin};
}

double pairwise_auc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw DegenerateInputError("AUC needs positives and negatives");
  double wins = 0.0;
  for (double p : positive) {
    for (double n : negative) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(positive.size()) * static_cast<double>(negative.size()));
}

WordAucResult eval_word_auc(enc::Encoder<float>& model, std::span<const corpus::SentencePair> pairs, int m,
                            std::uint64_t seed, const obj::ObjectiveConfig& cfg) {
  const int side = (model.config().max_seq_len - 3) / 2;
  const auto& table = model.params()[*model.params().find("encoder/embed/token")].value;
  std::vector<double> auc(pairs.size(), -1.0);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto x = clip(pairs[i].x, side);
    const auto y = clip(pairs[i].y, side);
    const auto bag = corpus::bag_of_words(x, y);
    if (bag.empty()) return;
    if (obj::negative_candidates(model.config().vocab_size, bag).empty()) return;
    num::Tape<float> tp(false);
    num::Var q = num::ops::select_row(tp, model.encode(tp, corpus::concat_pair(x, y)), 0);
    if (cfg.shared_projection) q = model.project(tp, q);
    const auto query = tp.value(q);
    const auto negs = obj::sample_negatives<float>(query.span(), table, bag, m, num::derive_seed(seed, {i}), cfg.weighting);
    std::vector<double> ps, ns;
    for (int w : bag) ps.push_back(num::cosine<float>(query.span(), table.row(w)));
    for (int w : negs.ids) ns.push_back(num::cosine<float>(query.span(), table.row(w)));
    auc[i] = pairwise_auc(ps, ns);
  });
  WordAucResult res;
  double sum = 0.0;
  for (double a : auc) {
    if (a < 0.0) continue;
    sum += a;
    ++res.pairs;
  }
  if (res.pairs == 0) throw DataError("word AUC: no pair with a nonempty bag and negatives");
  res.mean_auc = sum / res.pairs;
  return res;
}

}  // namespace hictl::train
