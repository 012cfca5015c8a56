#include "hictl/objectives/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hictl/error.hpp"
#include "hictl/log.hpp"
#include "hictl/numerics/functions.hpp"

namespace hictl::obj {

using num::Tape;
using num::Tensor;
using num::Var;
namespace ops = num::ops;

namespace {

constexpr std::uint64_t kNegativeStream = 0x4e47;

template <class T>
T tau_of(const ScoreConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw ConfigError("temperature must be positive");
  return static_cast<T>(cfg.temperature);
}

std::vector<int> range_excluding(int n, int skip_a, int skip_b) {
  std::vector<int> out;
  for (int j = 0; j < n; ++j) {
    if (j != skip_a && j != skip_b) out.push_back(j);
  }
  return out;
}

}  // namespace

template <class T>
Var info_nce(Tape<T>& tp, Var query, Var positive, std::span<const Var> negatives, const ScoreConfig& cfg) {
  const T tau = tau_of<T>(cfg);
  std::vector<Var> keys{positive};
  keys.insert(keys.end(), negatives.begin(), negatives.end());
  const Var scores = ops::cosine_matrix(tp, query, ops::stack_rows<T>(tp, keys));
  std::vector<int> neg(negatives.size());
  for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = static_cast<int>(j + 1);
  return ops::info_nce(tp, scores, 0, neg, tau);
}

template <class T>
T info_nce(const Tensor<T>& query, const Tensor<T>& positive, std::span<const Tensor<T>> negatives,
           const ScoreConfig& cfg) {
  Tape<T> tp(false);
  std::vector<Var> negs;
  for (const auto& n : negatives) negs.push_back(tp.constant(n));
  return tp.value(info_nce(tp, tp.constant(query), tp.constant(positive), negs, cfg)).item();
}

template <class T>
Var sentence_ctl(Tape<T>& tp, std::span<const Var> reprs_x, std::span<const Var> reprs_y, const ScoreConfig& cfg,
                 SentenceCtlStats* stats) {
  const T tau = tau_of<T>(cfg);
  const int n = static_cast<int>(reprs_x.size());
  if (n < 1) throw DataError("sentence_ctl needs at least one pair");
  if (reprs_y.size() != reprs_x.size()) throw DimError("sentence_ctl: x and y batches differ in size");
  // Rows 0..n-1 hold x, rows n..2n-1 hold y; the partner of row i is (i + n) mod 2n.
  std::vector<Var> rows(reprs_x.begin(), reprs_x.end());
  rows.insert(rows.end(), reprs_y.begin(), reprs_y.end());
  const Var z = ops::stack_rows<T>(tp, rows);
  const Var sim = ops::cosine_matrix(tp, z, z);
  std::vector<Var> terms;
  for (int i = 0; i < 2 * n; ++i) {
    const int pos = (i + n) % (2 * n);
    const std::vector<int> negs = range_excluding(2 * n, i, pos);
    if (stats) {
      ++stats->queries;
      stats->negatives_per_query.push_back(static_cast<int>(negs.size()));
    }
    terms.push_back(ops::info_nce(tp, ops::select_row(tp, sim, i), pos, negs, tau));
  }
  return ops::scale(tp, ops::sum<T>(tp, terms), T(1) / T(n));
}

template <class T>
T sentence_ctl(std::span<const Tensor<T>> reprs_x, std::span<const Tensor<T>> reprs_y, const ScoreConfig& cfg) {
  Tape<T> tp(false);
  std::vector<Var> xs, ys;
  for (const auto& r : reprs_x) xs.push_back(tp.constant(r));
  for (const auto& r : reprs_y) ys.push_back(tp.constant(r));
  return tp.value(sentence_ctl(tp, std::span<const Var>(xs), std::span<const Var>(ys), cfg)).item();
}

std::vector<int> negative_candidates(int vocab_size, std::span<const int> bag) {
  std::vector<int> sorted_bag(bag.begin(), bag.end());
  std::sort(sorted_bag.begin(), sorted_bag.end());
  std::vector<int> out;
  for (int w = corpus::kNumSpecials; w < vocab_size; ++w) {
    if (!std::binary_search(sorted_bag.begin(), sorted_bag.end(), w)) out.push_back(w);
  }
  return out;
}

template <class T>
NegativeSet sample_negatives(std::span<const T> query, const Tensor<T>& embeddings, std::span<const int> bag, int m,
                             std::uint64_t seed, NegativeWeighting weighting) {
  if (m < 1) throw ConfigError("number of negatives m must be >= 1");
  if (embeddings.rank() != 2) throw DimError("sample_negatives: embeddings must be a matrix");
  std::vector<int> cand = negative_candidates(embeddings.dims()[0], bag);
  if (cand.empty()) throw DegenerateInputError("sample_negatives: no candidate words outside the bag");
  NegativeSet out{{}, seed};
  if (static_cast<std::size_t>(m) >= cand.size()) {
    out.ids = std::move(cand);
    return out;
  }
  std::vector<double> w(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    w[i] = static_cast<double>(num::cosine<T>(query, embeddings.row(cand[i])));
  }
  if (weighting == NegativeWeighting::kSoftmax) {
    const double mx = *std::max_element(w.begin(), w.end());
    for (auto& v : w) v = std::exp(v - mx);
  } else {
    for (auto& v : w) v = (v + 1.0) / 2.0;
  }
  num::Rng rng(seed);
  for (int draw = 0; draw < m; ++draw) {
    double total = 0.0;
    for (double v : w) total += v;
    std::size_t pick = cand.size() - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        acc += w[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(cand.size()));
    }
    out.ids.push_back(cand[pick]);
    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(pick));
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

template <class T>
Var word_ctl(Tape<T>& tp, Var query, Var table, std::span<const int> bag, std::span<const int> negatives,
             const ScoreConfig& cfg) {
  const T tau = tau_of<T>(cfg);
  if (bag.empty()) throw DegenerateInputError("word_ctl: empty bag of words");
  std::vector<int> ids(bag.begin(), bag.end());
  ids.insert(ids.end(), negatives.begin(), negatives.end());
  const Var scores = ops::cosine_matrix(tp, query, ops::gather_rows<T>(tp, table, ids));
  if (tp.value(scores).rank() != 1) throw DimError("word_ctl: query must be a single vector");
  std::vector<int> neg(negatives.size());
  for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = static_cast<int>(bag.size() + j);
  std::vector<Var> terms;
  for (std::size_t t = 0; t < bag.size(); ++t) terms.push_back(ops::info_nce(tp, scores, static_cast<int>(t), neg, tau));
  return ops::scale(tp, ops::sum<T>(tp, terms), T(1) / static_cast<T>(bag.size()));
}

template <class T>
Var lm_loss(Tape<T>& tp, enc::Encoder<T>& model, std::span<const corpus::MaskedSequence> sequences) {
  std::size_t total = 0;
  for (const auto& s : sequences) total += s.positions.size();
  std::vector<Var> parts;
  for (const auto& s : sequences) {
    if (s.positions.empty()) continue;
    const Var h = ops::gather_rows<T>(tp, model.encode(tp, s.tokens), s.positions);
    const Var ce = ops::cross_entropy_rows<T>(tp, model.lm_logits(tp, h), s.labels);
    parts.push_back(ops::scale(tp, ce, static_cast<T>(s.positions.size()) / static_cast<T>(total)));
  }
  return ops::sum<T>(tp, parts);
}

template <class T>
LossGraph total_loss(Tape<T>& tp, enc::Encoder<T>& model, const corpus::PretrainBatch& batch,
                     const ObjectiveConfig& cfg, std::uint64_t seed,
                     const std::vector<std::vector<int>>* fixed_negatives, num::Rng* dropout_rng) {
  const int n = static_cast<int>(batch.size());
  if (n < 1) throw DataError("total_loss: empty batch");
  if (fixed_negatives && fixed_negatives->size() != batch.size()) {
    throw DimError("total_loss: one fixed negative list per pair required");
  }
  LossGraph g;
  g.negatives.resize(batch.size());
  const Var zero = tp.constant(Tensor<T>::scalar(T(0)));

  // LM encodings are kept when the word-level query reuses them.
  const bool query_from_lm = cfg.use_word && cfg.wctl_on_masked;
  std::vector<Var> lm_hidden(batch.size());
  std::size_t masked_total = 0;
  for (const auto& ex : batch.examples) masked_total += ex.lm.positions.size();
  std::vector<Var> lm_parts;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& lm = batch.examples[i].lm;
    const bool has_lm = cfg.use_lm && !lm.positions.empty();
    if (!has_lm && !query_from_lm) continue;
    lm_hidden[i] = model.encode(tp, lm.tokens, dropout_rng);
    if (!has_lm) continue;
    const Var rows = ops::gather_rows<T>(tp, lm_hidden[i], lm.positions);
    const Var ce = ops::cross_entropy_rows<T>(tp, model.lm_logits(tp, rows), lm.labels);
    lm_parts.push_back(ops::scale(tp, ce, static_cast<T>(lm.positions.size()) / static_cast<T>(masked_total)));
  }
  g.l_lm = lm_parts.empty() ? zero : ops::sum<T>(tp, lm_parts);

  if (cfg.use_sentence) {
    std::vector<Var> rx, ry;
    for (const auto& ex : batch.examples) {
      rx.push_back(model.sentence_repr(tp, corpus::with_cls(ex.x), dropout_rng));
      ry.push_back(model.sentence_repr(tp, corpus::with_cls(ex.y), dropout_rng));
    }
    g.l_s = sentence_ctl(tp, std::span<const Var>(rx), std::span<const Var>(ry), cfg.score);
  } else {
    g.l_s = zero;
  }

  if (cfg.use_word) {
    const Var table = model.token_table(tp);
    std::vector<Var> terms;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& ex = batch.examples[i];
      if (ex.bag.empty()) {
        warn("pair " + std::to_string(i) + " has an empty bag of words; skipped in word-level loss");
        ++g.skipped_pairs;
        continue;
      }
      const Var h = cfg.wctl_on_masked ? lm_hidden[i] : model.encode(tp, ex.concat, dropout_rng);
      Var q = ops::select_row(tp, h, 0);
      if (cfg.shared_projection) q = model.project(tp, q);
      if (static_cast<int>(tp.value(q).size()) != model.config().hidden_dim) {
        throw ConfigError("word-level loss needs projection width equal to hidden_dim (or shared_projection off)");
      }
      if (fixed_negatives) {
        g.negatives[i] = (*fixed_negatives)[i];
      } else {
        const auto cand = negative_candidates(model.config().vocab_size, ex.bag);
        if (!cand.empty()) {
          g.negatives[i] = sample_negatives<T>(tp.value(q).span(), tp.value(table), ex.bag, cfg.negatives_m,
                                               num::derive_seed(seed, {kNegativeStream, i}), cfg.weighting)
                               .ids;
        }
      }
      terms.push_back(word_ctl(tp, q, table, ex.bag, g.negatives[i], cfg.score));
    }
    const int valid = static_cast<int>(terms.size());
    g.l_w = valid > 0 ? ops::scale(tp, ops::sum<T>(tp, terms), T(1) / static_cast<T>(valid)) : zero;
  } else {
    g.l_w = zero;
  }

  const std::vector<Var> parts{g.l_lm, g.l_s, g.l_w};
  g.total = ops::sum<T>(tp, parts);
  g.values.l_lm = static_cast<double>(tp.value(g.l_lm).item());
  g.values.l_s = static_cast<double>(tp.value(g.l_s).item());
  g.values.l_w = static_cast<double>(tp.value(g.l_w).item());
  g.values.total = static_cast<double>(tp.value(g.total).item());
  return g;
}

#define HICTL_INSTANTIATE(T)                                                                                        \
  template Var info_nce<T>(Tape<T>&, Var, Var, std::span<const Var>, const ScoreConfig&);                         \
  template T info_nce<T>(const Tensor<T>&, const Tensor<T>&, std::span<const Tensor<T>>, const ScoreConfig&);     \
  template Var sentence_ctl<T>(Tape<T>&, std::span<const Var>, std::span<const Var>, const ScoreConfig&,          \
                               SentenceCtlStats*);                                                                \
  template T sentence_ctl<T>(std::span<const Tensor<T>>, std::span<const Tensor<T>>, const ScoreConfig&);         \
  template NegativeSet sample_negatives<T>(std::span<const T>, const Tensor<T>&, std::span<const int>, int,       \
                                           std::uint64_t, NegativeWeighting);                                     \
  template Var word_ctl<T>(Tape<T>&, Var, Var, std::span<const int>, std::span<const int>, const ScoreConfig&);   \
  template Var lm_loss<T>(Tape<T>&, enc::Encoder<T>&, std::span<const corpus::MaskedSequence>);                   \
  template LossGraph total_loss<T>(Tape<T>&, enc::Encoder<T>&, const corpus::PretrainBatch&,                      \
                                   const ObjectiveConfig&, std::uint64_t, const std::vector<std::vector<int>>*,   \
                                   num::Rng*);

HICTL_INSTANTIATE(float)
HICTL_INSTANTIATE(double)
#undef HICTL_INSTANTIATE

}  // namespace hictl::obj
