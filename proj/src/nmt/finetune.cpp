#include "hictl/nmt/finetune.hpp"

#include <algorithm>
#include <cmath>

#include "hictl/corpus/batch.hpp"
#include "hictl/error.hpp"
#include "hictl/log.hpp"
#include "hictl/nmt/bleu.hpp"
#include "hictl/numerics/adam.hpp"
#include "hictl/parallel.hpp"
#include "hictl/trainer/pretrain.hpp"

namespace hictl::nmt {

using num::Tape;
using num::Tensor;
using num::Var;
namespace ops = num::ops;

namespace {

std::vector<int> clip(std::span<const int> t, int n) {
  const auto k = std::min(t.size(), static_cast<std::size_t>(std::max(n, 0)));
  return {t.begin(), t.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<int> source_input(const NmtModel& m, std::span<const int> x) {
  return corpus::with_cls(clip(x, m.encoder.config().max_seq_len - 2));
}

struct TargetIO {
  std::vector<int> input;   // [BOS] y
  std::vector<int> labels;  // y [EOS]
};

TargetIO target_io(const NmtModel& m, std::span<const int> y) {
  const auto yc = clip(y, m.decoder.config().max_len - 1);
  TargetIO io;
  io.input.push_back(corpus::kBos);
  io.input.insert(io.input.end(), yc.begin(), yc.end());
  io.labels = yc;
  io.labels.push_back(corpus::kEos);
  return io;
}

/// Encoder states and the differentiable similarity vector of one source.
std::pair<Var, Var> encode_source(Tape<float>& tp, NmtModel& m, std::span<const int> x) {
  const Var h = m.encoder.encode(tp, source_input(m, x));
  const Var cls = m.encoder.project(tp, ops::select_row(tp, h, 0));
  return {h, target_similarities(tp, cls, m.encoder.token_table(tp))};
}

double grad_norm(const num::ParameterStore<float>& ps) {
  double s = 0.0;
  for (const auto& p : ps) {
    for (float g : p.grad.values()) s += static_cast<double>(g) * g;
  }
  return std::sqrt(s);
}

std::vector<double> log_softmax(std::span<const float> logits) {
  double mx = -INFINITY;
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0.0;
  for (float v : logits) z += std::exp(static_cast<double>(v) - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(logits[i]) - lz;
  return out;
}

}  // namespace

std::int64_t NmtConfig::resolved_stage2_steps() const {
  return stage2_steps >= 0 ? stage2_steps : stage1_steps / 5;
}

void NmtConfig::validate() const {
  if (stage1_steps < 0) throw ConfigError("stage1 steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup must be >= 0");
  if (lambda < 0.0 || !std::isfinite(lambda)) throw ConfigError("fusion lambda must be finite and >= 0");
}

NmtModel make_nmt_model(enc::Encoder<float> encoder, corpus::Vocabulary vocab, const NmtConfig& cfg) {
  cfg.validate();
  DecoderConfig dc = cfg.decoder;
  if (dc.hidden_dim == 0) dc.hidden_dim = encoder.config().hidden_dim;
  if (dc.vocab_size == 0) dc.vocab_size = encoder.config().vocab_size;
  if (dc.hidden_dim != encoder.config().hidden_dim) throw ConfigError("decoder hidden_dim must equal encoder hidden_dim");
  if (dc.vocab_size != vocab.size()) throw ConfigError("decoder vocabulary must be the shared vocabulary");
  if (encoder.config().projection_width() != encoder.config().hidden_dim) {
    throw ConfigError("logit fusion needs projection width equal to hidden_dim");
  }
  Decoder<float> decoder(dc, num::derive_seed(cfg.seed, {0xdec0}));
  return NmtModel{std::move(encoder), std::move(decoder), std::move(vocab), cfg.lambda, false, 0};
}

std::vector<corpus::SentencePair> encode_bitext(std::span<const corpus::TextPair> pairs, const corpus::Vocabulary& vocab) {
  std::vector<corpus::SentencePair> out;
  for (const auto& p : pairs) {
    corpus::SentencePair sp{vocab.encode(p.source), vocab.encode(p.target), true};
    if (sp.x.empty() || sp.y.empty()) throw DataError("bitext pair with an empty side");
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<NmtStepMetrics> finetune(NmtModel& model, std::span<const corpus::SentencePair> bitext, Stage stage,
                                     const NmtConfig& cfg) {
  cfg.validate();
  if (bitext.empty()) throw DataError("fine-tuning bitext is empty");
  if (stage == Stage::kFull && !model.stage1_done) warn("full fine-tuning stage run without a completed frozen-encoder stage");
  const bool frozen = stage == Stage::kFrozenEncoder;
  const std::int64_t steps = frozen ? cfg.stage1_steps : cfg.resolved_stage2_steps();
  const train::ScheduleConfig sched{cfg.lr, cfg.warmup_steps, cfg.stage1_steps + cfg.resolved_stage2_steps(), cfg.schedule};
  model.lambda = cfg.lambda;

  std::vector<bool> trainable;
  for (const auto& p : model.encoder.params()) trainable.push_back(p.trainable);
  model.encoder.params().set_trainable(!frozen);

  // Frozen encoder: states and similarities are constants, computed once.
  std::vector<Tensor<float>> memory, sims;
  if (frozen) {
    memory.resize(bitext.size());
    sims.resize(bitext.size());
    parallel_for(bitext.size(), [&](std::size_t i) {
      Tape<float> tp(false);
      const auto [h, sim] = encode_source(tp, model, bitext[i].x);
      memory[i] = tp.value(h);
      sims[i] = tp.value(sim);
    });
  }

  std::vector<NmtStepMetrics> log;
  num::AdamState<float> dec_adam, enc_adam;
  const std::uint64_t stage_tag = frozen ? 1 : 2;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double lr = train::lr_at(model.step, sched);
    num::Rng rng(num::derive_seed(cfg.seed, {stage_tag, static_cast<std::uint64_t>(k)}));
    std::vector<std::size_t> picks;
    std::size_t tokens = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      picks.push_back(static_cast<std::size_t>(rng.below(bitext.size())));
      tokens += target_io(model, bitext[picks.back()].y).labels.size();
    }
    NmtStepMetrics row{stage, model.step, 0.0, lr, 0.0, !frozen};
    {
      Tape<float> tp;
      std::vector<Var> parts;
      for (std::size_t i : picks) {
        Var h, sim;
        if (frozen) {
          h = tp.constant(memory[i]);
          sim = tp.constant(sims[i]);
        } else {
          std::tie(h, sim) = encode_source(tp, model, bitext[i].x);
        }
        const TargetIO io = target_io(model, bitext[i].y);
        const Var logits = fuse_logits(tp, model.decoder.logits(tp, io.input, h), sim, model.lambda);
        const Var ce = ops::cross_entropy_rows<float>(tp, logits, io.labels);
        parts.push_back(ops::scale(tp, ce, static_cast<float>(io.labels.size()) / static_cast<float>(tokens)));
      }
      const Var loss = ops::sum<float>(tp, parts);
      row.loss = static_cast<double>(tp.value(loss).item());
      if (!std::isfinite(row.loss)) {
        throw NumericalError("non-finite translation loss at step " + std::to_string(model.step));
      }
      tp.backward(loss);
    }
    row.encoder_grad_norm = grad_norm(model.encoder.params());
    num::adam_step(model.decoder.params(), dec_adam, lr);
    if (!frozen) num::adam_step(model.encoder.params(), enc_adam, lr);
    model.decoder.params().zero_grad();
    model.encoder.params().zero_grad();
    ++model.step;
    log.push_back(row);
  }

  std::size_t i = 0;
  for (auto& p : model.encoder.params()) p.trainable = trainable[i++];
  if (frozen) model.stage1_done = true;
  return log;
}

Tensor<float> source_similarities(NmtModel& model, std::span<const int> source) {
  Tape<float> tp(false);
  return tp.value(encode_source(tp, model, source).second);
}

NmtScorer::NmtScorer(NmtModel& model, std::span<const int> source) : model_(model) {
  Tape<float> tp(false);
  const auto [h, sim] = encode_source(tp, model, source);
  memory_ = tp.value(h);
  fusion_ = FusionState<float>{tp.value(sim), model.lambda};
}

int NmtScorer::vocab_size() const { return model_.decoder.config().vocab_size; }

std::vector<double> NmtScorer::log_probs(std::span<const int> prefix) {
  std::vector<int> input{corpus::kBos};
  input.insert(input.end(), prefix.begin(), prefix.end());
  Tape<float> tp(false);
  const auto& all = tp.value(model_.decoder.logits(tp, input, tp.constant(memory_)));
  Tensor<float> last({all.cols()});
  const auto row = all.row(all.rows() - 1);
  std::copy(row.begin(), row.end(), last.values().begin());
  return log_softmax(fuse_logits(last, fusion_).span());
}

std::vector<int> translate(NmtModel& model, std::span<const int> source, const BeamConfig& beam) {
  BeamConfig b = beam;
  b.eos = corpus::kEos;
  b.max_len = std::min(b.max_len, model.decoder.config().max_len);
  NmtScorer scorer(model, source);
  const auto hyps = beam_search(scorer, b);
  if (hyps.empty()) return {};
  std::vector<int> out = hyps.front().tokens;
  if (!out.empty() && out.back() == corpus::kEos) out.pop_back();
  return out;
}

std::vector<std::vector<int>> translate_all(NmtModel& model, std::span<const std::vector<int>> sources,
                                            const BeamConfig& beam) {
  std::vector<std::vector<int>> out(sources.size());
  parallel_for(sources.size(), [&](std::size_t i) { out[i] = translate(model, sources[i], beam); });
  return out;
}

double evaluate_bleu(NmtModel& model, std::span<const corpus::SentencePair> pairs, const BeamConfig& beam) {
  std::vector<std::vector<int>> sources;
  for (const auto& p : pairs) sources.push_back(p.x);
  const auto hyps = translate_all(model, sources, beam);
  std::vector<std::string> h, r;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    h.push_back(model.vocab.decode(hyps[i]));
    r.push_back(model.vocab.decode(pairs[i].y));
  }
  return corpus_bleu(std::span<const std::string>(h), std::span<const std::string>(r)).bleu;
}

bool has_decoder(const train::Checkpoint& ck) { return ck.has("config/decoder/layers"); }

train::Checkpoint to_checkpoint(const NmtModel& m) {
  train::Checkpoint ck;
  train::put_encoder_config(ck, m.encoder.config());
  const auto& d = m.decoder.config();
  ck.put_u64("config/decoder/layers", static_cast<std::uint64_t>(d.layers));
  ck.put_u64("config/decoder/hidden_dim", static_cast<std::uint64_t>(d.hidden_dim));
  ck.put_u64("config/decoder/heads", static_cast<std::uint64_t>(d.heads));
  ck.put_u64("config/decoder/ffn_dim", static_cast<std::uint64_t>(d.ffn_dim));
  ck.put_u64("config/decoder/max_len", static_cast<std::uint64_t>(d.max_len));
  ck.put_u64("config/decoder/vocab_size", static_cast<std::uint64_t>(d.vocab_size));
  ck.put_f64("nmt/lambda", {m.lambda});
  ck.put_u64("nmt/stage1_done", m.stage1_done ? 1 : 0);
  ck.put_u64("nmt/step", static_cast<std::uint64_t>(m.step));
  train::put_vocab(ck, m.vocab);
  train::put_params(ck, "", m.encoder.params());
  train::put_params(ck, "nmt/", m.decoder.params());
  return ck;
}

NmtModel nmt_from_checkpoint(const train::Checkpoint& ck) {
  if (!has_decoder(ck)) throw CheckpointError("checkpoint holds an encoder only; run finetune-nmt first");
  const auto ec = train::get_encoder_config(ck);
  DecoderConfig dc;
  auto u = [&](const char* k) { return static_cast<int>(ck.u64(std::string("config/decoder/") + k)); };
  dc.layers = u("layers");
  dc.hidden_dim = u("hidden_dim");
  dc.heads = u("heads");
  dc.ffn_dim = u("ffn_dim");
  dc.max_len = u("max_len");
  dc.vocab_size = u("vocab_size");
  return NmtModel{enc::Encoder<float>(ec, train::get_params(ck, "")), Decoder<float>(dc, train::get_params(ck, "nmt/")),
                  train::get_vocab(ck), ck.f64("nmt/lambda").at(0), ck.u64("nmt/stage1_done") != 0,
                  static_cast<std::int64_t>(ck.u64("nmt/step"))};
}

}  // namespace hictl::nmt
