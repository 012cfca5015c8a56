#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hictl/corpus/corpus.hpp"
#include "hictl/encoder/encoder.hpp"
#include "hictl/nmt/beam_search.hpp"
#include "hictl/nmt/decoder.hpp"
#include "hictl/nmt/fusion.hpp"
#include "hictl/trainer/checkpoint.hpp"
#include "hictl/trainer/schedule.hpp"

namespace hictl::nmt {

enum class Stage { kFrozenEncoder, kFull };

struct NmtConfig {
  /// hidden_dim and vocab_size 0 are taken from the encoder.
  DecoderConfig decoder{2, 0, 4, 256, 64, 0};
  std::int64_t stage1_steps = 1000;
  /// -1 means 20% of stage1_steps.
  std::int64_t stage2_steps = -1;
  int batch_size = 16;
  double lr = 1e-3;
  std::int64_t warmup_steps = 100;
  train::Schedule schedule = train::Schedule::kInverseSqrt;
  double lambda = 1.0;
  std::uint64_t seed = 1;

  std::int64_t resolved_stage2_steps() const;
  void validate() const;
};

/// Pretrained encoder, fresh decoder and the fusion weight.
struct NmtModel {
  enc::Encoder<float> encoder;
  Decoder<float> decoder;
  corpus::Vocabulary vocab;
  double lambda = 1.0;
  bool stage1_done = false;
  /// Updates applied so far over both stages; drives the schedule.
  std::int64_t step = 0;
};

NmtModel make_nmt_model(enc::Encoder<float> encoder, corpus::Vocabulary vocab, const NmtConfig& cfg);

struct NmtStepMetrics {
  Stage stage = Stage::kFrozenEncoder;
  std::int64_t step = 0;
  double loss = 0.0;  // mean token cross-entropy
  double lr = 0.0;
  /// L2 norm of all encoder gradients of this step.
  double encoder_grad_norm = 0.0;
  /// Whether the similarity vectors were computed from the current encoder.
  bool fresh_similarities = false;
};

/// Teacher-forced training on (source, target) pairs, decoder input
/// [BOS] y and labels y [EOS]. The frozen-encoder stage caches encoder
/// states and similarity vectors once and only updates the decoder; the
/// full stage recomputes both per batch and updates everything. Running the
/// full stage first only warns.
std::vector<NmtStepMetrics> finetune(NmtModel& model, std::span<const corpus::SentencePair> bitext, Stage stage,
                                     const NmtConfig& cfg);

/// Similarity vector of a source sentence against the encoder embeddings.
num::Tensor<float> source_similarities(NmtModel& model, std::span<const int> source);

/// Fused next-token log-probabilities for one source sentence.
class NmtScorer : public StepScorer {
 public:
  NmtScorer(NmtModel& model, std::span<const int> source);
  int vocab_size() const override;
  std::vector<double> log_probs(std::span<const int> prefix) override;

 private:
  NmtModel& model_;
  num::Tensor<float> memory_;
  FusionState<float> fusion_;
};

/// Best beam hypothesis without the end token.
std::vector<int> translate(NmtModel& model, std::span<const int> source, const BeamConfig& beam);
std::vector<std::vector<int>> translate_all(NmtModel& model, std::span<const std::vector<int>> sources,
                                            const BeamConfig& beam);
/// Corpus BLEU of beam translations of the x side against the y side.
double evaluate_bleu(NmtModel& model, std::span<const corpus::SentencePair> pairs, const BeamConfig& beam);

std::vector<corpus::SentencePair> encode_bitext(std::span<const corpus::TextPair> pairs, const corpus::Vocabulary& vocab);

train::Checkpoint to_checkpoint(const NmtModel& model);
/// Throws CheckpointError for a checkpoint without a decoder.
NmtModel nmt_from_checkpoint(const train::Checkpoint& ck);
bool has_decoder(const train::Checkpoint& ck);

}  // namespace hictl::nmt
