#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hictl/corpus/batch.hpp"
#include "hictl/encoder/encoder.hpp"
#include "hictl/numerics/adam.hpp"
#include "hictl/objectives/objectives.hpp"
#include "hictl/trainer/checkpoint.hpp"
#include "hictl/trainer/schedule.hpp"

namespace hictl::train {

struct TrainConfig {
  /// Horizon of the learning-rate schedule.
  std::int64_t steps = 1000;
  /// Last step (exclusive) run by this invocation; -1 means `steps`. Lets a
  /// run be split into pieces that match an unbroken run.
  std::int64_t stop_at = -1;
  int batch_size = 8;
  double lr_peak = 2.5e-5;
  std::int64_t warmup_steps = 100;
  Schedule schedule = Schedule::kInvertLinear;
  std::uint64_t seed = 1;
  double mask_rate = 0.15;
  double perturb_rate = 0.3;
  std::int64_t eval_every = 0;
  obj::ObjectiveConfig objective;
  /// vocab_size 0 is filled in from the vocabulary.
  enc::EncoderConfig encoder;

  ScheduleConfig schedule_config() const { return {lr_peak, warmup_steps, steps, schedule}; }
  void validate() const;
};

struct StepMetrics {
  std::int64_t step = 0;
  obj::LossBundle loss;
  double lr = 0.0;
};

inline constexpr const char* kMetricsHeader = "step,l_lm,l_s,l_w,total,lr";
std::string metrics_row(const StepMetrics& m);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<StepMetrics>& rows);

struct PretrainState {
  enc::Encoder<float> model;
  num::AdamState<float> adam;
  corpus::Vocabulary vocab;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

/// Fresh weights for cfg (vocab_size taken from the vocabulary).
PretrainState init_pretrain_state(const TrainConfig& cfg, const corpus::Vocabulary& vocab);

using StepCallback = std::function<void(const StepMetrics&, PretrainState&)>;

/// Runs steps state.step .. end of cfg, appending one metrics row per step.
/// Throws NumericalError naming the component when a loss is not finite.
void run_pretraining(PretrainState& state, const TrainConfig& cfg, const corpus::PairSource& source,
                     std::vector<StepMetrics>& log, const StepCallback& on_step = {});

struct PretrainResult {
  PretrainState state;
  std::vector<StepMetrics> metrics;
};

PretrainResult pretrain(const TrainConfig& cfg, const corpus::Vocabulary& vocab, const corpus::PairSource& source,
                        const StepCallback& on_step = {});

/// Second pretraining phase from a checkpointed state. With reset_step the
/// step counter, optimizer moments and seed restart from cfg; otherwise
/// the run resumes exactly where the state left off.
PretrainResult continue_pretrain(PretrainState state, const TrainConfig& cfg, const corpus::PairSource& source,
                                 bool reset_step, const StepCallback& on_step = {});

void put_encoder_config(Checkpoint& ck, const enc::EncoderConfig& cfg);
enc::EncoderConfig get_encoder_config(const Checkpoint& ck);
void put_vocab(Checkpoint& ck, const corpus::Vocabulary& vocab);
corpus::Vocabulary get_vocab(const Checkpoint& ck);

Checkpoint to_checkpoint(const PretrainState& state);
/// Throws ConfigError when `expected` is given and differs from the stored
/// encoder config (vocab_size 0 in `expected` is not compared).
PretrainState from_checkpoint(const Checkpoint& ck, const enc::EncoderConfig* expected = nullptr);

}  // namespace hictl::train
