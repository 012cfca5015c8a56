#include "hictl/trainer/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "hictl/corpus/batch.hpp"
#include "hictl/error.hpp"
#include "hictl/log.hpp"
#include "hictl/numerics/adam.hpp"

namespace hictl::train {

namespace {

std::vector<int> cls_input(const enc::Encoder<float>& model, std::span<const int> tokens) {
  const auto room = static_cast<std::size_t>(std::max(model.config().max_seq_len - 2, 0));
  return corpus::with_cls(tokens.subspan(0, std::min(tokens.size(), room)));
}

void check_labels(std::span<const LabeledExample> xs, int n_classes) {
  for (const auto& e : xs) {
    if (e.label < 0 || e.label >= n_classes) {
      throw DataError("label " + std::to_string(e.label) + " outside [0, " + std::to_string(n_classes) + ")");
    }
    if (e.tokens.empty()) throw DataError("classification example without tokens");
  }
}

}  // namespace

std::vector<LabeledExample> read_labeled_tsv(const std::filesystem::path& path, const corpus::Vocabulary& vocab,
                                             int n_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read labeled data " + path.string());
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (corpus::split_whitespace(line).empty()) continue;
    const auto tab = line.find('\t');
    int label = -1;
    const auto* first = line.data();
    const auto* last = line.data() + (tab == std::string::npos ? 0 : tab);
    if (tab == std::string::npos || std::from_chars(first, last, label).ptr != last) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected label<TAB>text");
    }
    out.push_back({vocab.encode(std::string_view(line).substr(tab + 1)), label});
  }
  check_labels(out, n_classes);
  return out;
}

int predict(enc::Encoder<float>& model, enc::ClassifierHead<float>& head, std::span<const int> tokens) {
  num::Tape<float> tp(false);
  const auto& scores = tp.value(enc::classify(tp, model, head, cls_input(model, tokens)));
  return static_cast<int>(std::max_element(scores.values().begin(), scores.values().end()) - scores.values().begin());
}

double classification_accuracy(enc::Encoder<float>& model, enc::ClassifierHead<float>& head,
                               std::span<const LabeledExample> examples) {
  if (examples.empty()) throw DataError("accuracy of an empty set");
  int hits = 0;
  for (const auto& e : examples) hits += predict(model, head, e.tokens) == e.label;
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

ClassifierResult finetune_classifier(enc::Encoder<float>& model, std::span<const LabeledExample> train,
                                     std::span<const LabeledExample> heldout, const ClassifierConfig& cfg) {
  if (train.empty()) throw DataError("classifier training set is empty");
  if (cfg.n_classes < 1 || cfg.batch_size < 1 || cfg.steps < 0) throw ConfigError("invalid classifier config");
  check_labels(train, cfg.n_classes);
  check_labels(heldout, cfg.n_classes);
  std::set<int> seen;
  for (const auto& e : train) seen.insert(e.label);
  if (seen.size() == 1) warn("classification training data contains a single class");

  const int width = cfg.on_projection ? model.config().projection_width() : model.config().hidden_dim;
  ClassifierResult res{enc::ClassifierHead<float>(width, cfg.n_classes, cfg.on_projection, num::derive_seed(cfg.seed, {0xc1a5})),
                       0.0};
  auto& head = res.head;
  std::vector<bool> trainable;
  for (const auto& p : model.params()) trainable.push_back(p.trainable);
  if (cfg.freeze_encoder) model.params().set_trainable(false);

  num::AdamState<float> enc_adam, head_adam;
  num::Rng rng(num::derive_seed(cfg.seed, {0xba7c}));
  for (int s = 0; s < cfg.steps; ++s) {
    num::Tape<float> tp;
    std::vector<num::Var> losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& e = train[rng.below(train.size())];
      const num::Var scores = enc::classify(tp, model, head, cls_input(model, e.tokens));
      const int label = e.label;
      losses.push_back(num::ops::cross_entropy_rows<float>(tp, scores, std::span<const int>(&label, 1)));
    }
    const num::Var loss = num::ops::scale(tp, num::ops::sum<float>(tp, losses), 1.0f / static_cast<float>(cfg.batch_size));
    tp.backward(loss);
    num::adam_step(head.params, head_adam, cfg.lr);
    if (!cfg.freeze_encoder) num::adam_step(model.params(), enc_adam, cfg.lr);
    head.params.zero_grad();
    model.params().zero_grad();
  }
  std::size_t i = 0;
  for (auto& p : model.params()) p.trainable = trainable[i++];
  res.heldout_accuracy = heldout.empty() ? 0.0 : classification_accuracy(model, head, heldout);
  return res;
}

}  // namespace hictl::train
