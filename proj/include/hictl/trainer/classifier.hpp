#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hictl/corpus/vocab.hpp"
#include "hictl/encoder/encoder.hpp"

namespace hictl::train {

struct LabeledExample {
  std::vector<int> tokens;  // without [CLS]/[SEP]
  int label = 0;
};

/// Lines of "label<TAB>text". Throws DataError on malformed lines and on
/// labels outside [0, n_classes).
std::vector<LabeledExample> read_labeled_tsv(const std::filesystem::path& path, const corpus::Vocabulary& vocab,
                                             int n_classes);

struct ClassifierConfig {
  int n_classes = 2;
  int steps = 500;
  int batch_size = 8;
  double lr = 1e-3;
  bool freeze_encoder = false;
  /// Head reads the projected sentence representation instead of the raw
  /// [CLS] state.
  bool on_projection = false;
  std::uint64_t seed = 1;
};

struct ClassifierResult {
  enc::ClassifierHead<float> head;
  double heldout_accuracy = 0.0;
};

/// Cross-entropy training of a fresh head (and the encoder unless frozen)
/// with Adam at a constant learning rate. Warns when the training labels
/// contain a single class.
ClassifierResult finetune_classifier(enc::Encoder<float>& model, std::span<const LabeledExample> train,
                                     std::span<const LabeledExample> heldout, const ClassifierConfig& cfg);

int predict(enc::Encoder<float>& model, enc::ClassifierHead<float>& head, std::span<const int> tokens);
double classification_accuracy(enc::Encoder<float>& model, enc::ClassifierHead<float>& head,
                               std::span<const LabeledExample> examples);

}  // namespace hictl::train
