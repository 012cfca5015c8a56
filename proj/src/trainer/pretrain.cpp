#include "hictl/trainer/pretrain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hictl/error.hpp"

namespace hictl::train {

namespace {

constexpr std::uint64_t kBatchStream = 0xb47c;
constexpr std::uint64_t kLossStream = 0x1055;
constexpr std::uint64_t kDropoutStream = 0xd50f;

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += '\n';
    out += v[i];
  }
  return out;
}

void check_finite(const obj::LossBundle& l, std::int64_t step) {
  const std::pair<const char*, double> parts[] = {{"l_lm", l.l_lm}, {"l_s", l.l_s}, {"l_w", l.l_w}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw NumericalError("non-finite " + std::string(name) + " = " + std::to_string(v) + " at step " +
                           std::to_string(step));
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_peak > 0.0)) throw ConfigError("lr must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup must be >= 0");
  if (objective.negatives_m < 1) throw ConfigError("m must be >= 1");
  if (mask_rate < 0.0 || mask_rate > 1.0) throw ConfigError("mask_rate must be in [0, 1]");
  if (perturb_rate < 0.0 || perturb_rate > 1.0) throw ConfigError("perturb_rate must be in [0, 1]");
  if (!(objective.score.temperature > 0.0)) throw ConfigError("temperature must be positive");
}

std::string metrics_row(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(m.step), m.loss.l_lm,
                m.loss.l_s, m.loss.l_w, m.loss.total, m.lr);
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<StepMetrics>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write metrics log " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_row(r) << '\n';
}

PretrainState init_pretrain_state(const TrainConfig& cfg, const corpus::Vocabulary& vocab) {
  cfg.validate();
  if (vocab.word_count() < 2) throw DataError("pretraining needs at least 2 non-special vocabulary words");
  enc::EncoderConfig ec = cfg.encoder;
  if (ec.vocab_size == 0) ec.vocab_size = vocab.size();
  if (ec.vocab_size != vocab.size()) {
    throw ConfigError("encoder vocab_size " + std::to_string(ec.vocab_size) + " differs from vocabulary size " +
                      std::to_string(vocab.size()));
  }
  return PretrainState{enc::Encoder<float>(ec, num::derive_seed(cfg.seed, {0x1417})), {}, vocab, cfg.seed, 0};
}

void run_pretraining(PretrainState& state, const TrainConfig& cfg, const corpus::PairSource& source,
                     std::vector<StepMetrics>& log, const StepCallback& on_step) {
  cfg.validate();
  auto& model = state.model;
  const auto sched = cfg.schedule_config();
  const std::int64_t end = cfg.stop_at >= 0 ? cfg.stop_at : cfg.steps;
  const int max_len = model.config().max_seq_len;
  for (std::int64_t s = state.step; s < end; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const double lr = lr_at(s, sched);
    const auto batch = corpus::make_pretrain_batch(source, cfg.batch_size, num::derive_seed(state.seed, {us, kBatchStream}),
                                                   max_len, cfg.mask_rate, model.config().vocab_size);
    num::Rng dropout_rng(num::derive_seed(state.seed, {us, kDropoutStream}));
    StepMetrics row;
    {
      num::Tape<float> tp;
      const auto g = obj::total_loss(tp, model, batch, cfg.objective, num::derive_seed(state.seed, {us, kLossStream}),
                                     nullptr, &dropout_rng);
      check_finite(g.values, s);
      tp.backward(g.total);
      row = StepMetrics{s, g.values, lr};
    }
    num::adam_step(model.params(), state.adam, lr);
    model.params().zero_grad();
    state.step = s + 1;
    log.push_back(row);
    if (on_step) on_step(row, state);
  }
}

PretrainResult pretrain(const TrainConfig& cfg, const corpus::Vocabulary& vocab, const corpus::PairSource& source,
                        const StepCallback& on_step) {
  PretrainResult res{init_pretrain_state(cfg, vocab), {}};
  run_pretraining(res.state, cfg, source, res.metrics, on_step);
  return res;
}

PretrainResult continue_pretrain(PretrainState state, const TrainConfig& cfg, const corpus::PairSource& source,
                                 bool reset_step, const StepCallback& on_step) {
  enc::EncoderConfig want = cfg.encoder;
  if (want.vocab_size == 0) want.vocab_size = state.model.config().vocab_size;
  if (!(want == state.model.config())) {
    throw ConfigError("checkpoint encoder config does not match the requested encoder config");
  }
  if (reset_step) {
    state.step = 0;
    state.adam = num::AdamState<float>{};
    state.seed = cfg.seed;
  }
  PretrainResult res{std::move(state), {}};
  run_pretraining(res.state, cfg, source, res.metrics, on_step);
  return res;
}

void put_encoder_config(Checkpoint& ck, const enc::EncoderConfig& c) {
  ck.put_u64("config/encoder/layers", static_cast<std::uint64_t>(c.layers));
  ck.put_u64("config/encoder/hidden_dim", static_cast<std::uint64_t>(c.hidden_dim));
  ck.put_u64("config/encoder/heads", static_cast<std::uint64_t>(c.heads));
  ck.put_u64("config/encoder/ffn_dim", static_cast<std::uint64_t>(c.ffn_dim));
  ck.put_u64("config/encoder/max_seq_len", static_cast<std::uint64_t>(c.max_seq_len));
  ck.put_u64("config/encoder/vocab_size", static_cast<std::uint64_t>(c.vocab_size));
  ck.put_u64("config/encoder/projection_dim", static_cast<std::uint64_t>(c.projection_dim));
  ck.put_f64("config/encoder/dropout", {c.dropout});
}

enc::EncoderConfig get_encoder_config(const Checkpoint& ck) {
  enc::EncoderConfig c;
  auto i = [&](const char* key) { return static_cast<int>(ck.u64(std::string("config/encoder/") + key)); };
  c.layers = i("layers");
  c.hidden_dim = i("hidden_dim");
  c.heads = i("heads");
  c.ffn_dim = i("ffn_dim");
  c.max_seq_len = i("max_seq_len");
  c.vocab_size = i("vocab_size");
  c.projection_dim = i("projection_dim");
  c.dropout = ck.f64("config/encoder/dropout").at(0);
  return c;
}

void put_vocab(Checkpoint& ck, const corpus::Vocabulary& vocab) { ck.put_bytes("vocab/tokens", join_lines(vocab.tokens())); }

corpus::Vocabulary get_vocab(const Checkpoint& ck) {
  const std::string all = ck.bytes("vocab/tokens");
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= all.size()) {
    const auto nl = all.find('\n', start);
    tokens.push_back(all.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  if (tokens.size() < static_cast<std::size_t>(corpus::kNumSpecials)) throw CheckpointError("vocabulary record too short");
  for (int i = 0; i < corpus::kNumSpecials; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != corpus::kSpecialTokens[static_cast<std::size_t>(i)]) {
      throw CheckpointError("vocabulary record has unexpected special tokens");
    }
  }
  return corpus::Vocabulary::from_words(std::span<const std::string>(tokens).subspan(corpus::kNumSpecials));
}

Checkpoint to_checkpoint(const PretrainState& st) {
  Checkpoint ck;
  put_encoder_config(ck, st.model.config());
  put_vocab(ck, st.vocab);
  ck.put_u64("rng/seed", st.seed);
  ck.put_u64("train/step", static_cast<std::uint64_t>(st.step));
  put_params(ck, "", st.model.params());
  put_adam(ck, "", st.adam, st.model.params());
  return ck;
}

PretrainState from_checkpoint(const Checkpoint& ck, const enc::EncoderConfig* expected) {
  const enc::EncoderConfig cfg = get_encoder_config(ck);
  if (expected) {
    enc::EncoderConfig want = *expected;
    if (want.vocab_size == 0) want.vocab_size = cfg.vocab_size;
    if (!(want == cfg)) {
      throw ConfigError("config mismatch: checkpoint has layers=" + std::to_string(cfg.layers) + " hidden_dim=" +
                        std::to_string(cfg.hidden_dim) + " heads=" + std::to_string(cfg.heads) + " ffn_dim=" +
                        std::to_string(cfg.ffn_dim) + " max_seq_len=" + std::to_string(cfg.max_seq_len) +
                        " vocab_size=" + std::to_string(cfg.vocab_size) + ", requested hidden_dim=" +
                        std::to_string(want.hidden_dim));
    }
  }
  corpus::Vocabulary vocab = get_vocab(ck);
  if (vocab.size() != cfg.vocab_size) throw CheckpointError("vocabulary size disagrees with encoder config");
  enc::Encoder<float> model(cfg, get_params(ck, ""));
  auto adam = get_adam(ck, "");
  if (!adam.m.empty() && adam.m.size() != model.params().size()) throw CheckpointError("adam state does not match parameters");
  return PretrainState{std::move(model), std::move(adam), std::move(vocab), ck.u64("rng/seed"),
                       static_cast<std::int64_t>(ck.u64("train/step"))};
}

}  // namespace hictl::train
