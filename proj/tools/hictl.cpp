// Command-line entry point. Every command resolves its settings as
// defaults < --config file < explicit flags, runs, and writes a manifest.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hictl/cli/config_file.hpp"
#include "hictl/cli/manifest.hpp"
#include "hictl/corpus/corpus.hpp"
#include "hictl/error.hpp"
#include "hictl/nmt/bleu.hpp"
#include "hictl/nmt/finetune.hpp"
#include "hictl/trainer/classifier.hpp"
#include "hictl/trainer/evaluation.hpp"
#include "hictl/trainer/pretrain.hpp"

namespace fs = std::filesystem;
using namespace hictl;
using cli::ConfigMap;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Option {
  std::string key;
  std::string fallback;
  std::string help;
  bool flag = false;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Option> options;
  std::function<void(const ConfigMap&, cli::RunManifest&)> run;
};

// ---------------------------------------------------------------------------
// Shared option groups. Defaults follow the reference hyperparameters where
// they exist.

std::vector<Option> training_options() {
  return {
      {"steps", "1000", "schedule horizon in updates"},
      {"stop-at", "-1", "stop after this step (-1: steps)"},
      {"batch-size", "8", "sentence pairs per update"},
      {"lr", "2.5e-5", "peak learning rate"},
      {"warmup", "100", "linear warmup steps"},
      {"schedule", "invert-linear", "invert-linear | inverse-sqrt"},
      {"seed", "1", "run seed"},
      {"m", "512", "negative words per pair"},
      {"mask-rate", "0.15", "masked fraction of eligible tokens"},
      {"perturb-rate", "0.3", "reordered fraction for monolingual pairs"},
      {"temperature", "1", "InfoNCE temperature"},
      {"weighting", "softmax", "negative sampling weights: softmax | l1"},
      {"disable", "", "comma list of components to switch off: lm,sctl,wctl"},
      {"wctl-on-masked", "false", "word-level query from the masked input"},
      {"shared-projection", "true", "word-level query passes through the projection"},
      {"eval-every", "0", "retrieval evaluation interval (needs --eval)"},
      {"eval", "", "held-out parallel corpus for periodic evaluation"},
      {"parallel", "", "comma list of tab-separated parallel corpora"},
      {"mono", "", "comma list of monolingual corpora"},
      {"log", "", "metrics CSV (default <out>.metrics.csv)"},
  };
}

std::vector<Option> encoder_options() {
  return {
      {"layers", "2", "encoder layers"},
      {"hidden", "64", "hidden width"},
      {"heads", "4", "attention heads"},
      {"ffn", "256", "feed-forward width"},
      {"max-seq", "128", "longest encoder input"},
      {"projection-dim", "0", "sentence projection width (0: hidden)"},
      {"dropout", "0", "dropout rate"},
      {"min-count", "1", "vocabulary count threshold"},
  };
}

std::vector<Option> beam_options() {
  return {
      {"beam", "4", "beam width"},
      {"lenpen", "0.6", "length penalty exponent"},
      {"max-len", "64", "longest output including the end token"},
  };
}

template <class... Groups>
std::vector<Option> concat(std::vector<Option> first, Groups... rest) {
  (first.insert(first.end(), rest.begin(), rest.end()), ...);
  return first;
}

// ---------------------------------------------------------------------------
// Helpers.

std::vector<std::string> paths_of(const ConfigMap& c, const std::string& key) { return cli::get_list(c, key); }

std::string required(const ConfigMap& c, const std::string& key) {
  const std::string v = cli::get_string(c, key);
  if (v.empty()) throw ConfigError("config key '" + key + "' is required");
  return v;
}

std::string derived_path(const ConfigMap& c, const std::string& key, const std::string& base, const std::string& suffix) {
  const std::string v = cli::get_string(c, key);
  return v.empty() ? base + suffix : v;
}

train::TrainConfig train_config(const ConfigMap& c) {
  train::TrainConfig t;
  t.steps = cli::get_int(c, "steps");
  t.stop_at = cli::get_int(c, "stop-at");
  t.batch_size = static_cast<int>(cli::get_int(c, "batch-size"));
  t.lr_peak = cli::get_double(c, "lr");
  t.warmup_steps = cli::get_int(c, "warmup");
  t.schedule = train::parse_schedule(cli::get_string(c, "schedule"));
  t.seed = cli::get_uint(c, "seed");
  t.mask_rate = cli::get_double(c, "mask-rate");
  t.perturb_rate = cli::get_double(c, "perturb-rate");
  t.eval_every = cli::get_int(c, "eval-every");
  t.objective.negatives_m = static_cast<int>(cli::get_int(c, "m"));
  t.objective.score.temperature = cli::get_double(c, "temperature");
  const std::string w = cli::get_string(c, "weighting");
  if (w == "softmax") t.objective.weighting = obj::NegativeWeighting::kSoftmax;
  else if (w == "l1") t.objective.weighting = obj::NegativeWeighting::kL1;
  else throw ConfigError("config key 'weighting': expected softmax or l1, got '" + w + "'");
  for (const auto& part : cli::get_list(c, "disable")) {
    if (part == "lm") t.objective.use_lm = false;
    else if (part == "sctl") t.objective.use_sentence = false;
    else if (part == "wctl") t.objective.use_word = false;
    else throw ConfigError("config key 'disable': unknown component '" + part + "' (lm, sctl, wctl)");
  }
  t.objective.wctl_on_masked = cli::get_bool(c, "wctl-on-masked");
  t.objective.shared_projection = cli::get_bool(c, "shared-projection");
  t.validate();
  return t;
}

enc::EncoderConfig encoder_config(const ConfigMap& c) {
  enc::EncoderConfig e;
  e.layers = static_cast<int>(cli::get_int(c, "layers"));
  e.hidden_dim = static_cast<int>(cli::get_int(c, "hidden"));
  e.heads = static_cast<int>(cli::get_int(c, "heads"));
  e.ffn_dim = static_cast<int>(cli::get_int(c, "ffn"));
  e.max_seq_len = static_cast<int>(cli::get_int(c, "max-seq"));
  e.projection_dim = static_cast<int>(cli::get_int(c, "projection-dim"));
  e.dropout = cli::get_double(c, "dropout");
  return e;
}

void add_inputs(cli::RunManifest& m, const std::vector<std::string>& paths) {
  for (const auto& p : paths) m.inputs.push_back(cli::digest_file(p));
}

/// Training pairs from parallel and monolingual corpora under one vocabulary.
std::shared_ptr<corpus::PairSource> pair_source(const ConfigMap& c, const corpus::Vocabulary& vocab, double perturb_rate) {
  std::vector<std::shared_ptr<const corpus::PairSource>> parts;
  for (const auto& p : paths_of(c, "parallel")) {
    const auto pairs = corpus::read_parallel(p);
    parts.push_back(std::make_shared<corpus::ParallelSource>(std::span<const corpus::TextPair>(pairs), vocab));
  }
  std::vector<std::vector<int>> mono;
  for (const auto& p : paths_of(c, "mono")) {
    for (const auto& line : corpus::read_monolingual(p)) mono.push_back(vocab.encode(line));
  }
  if (!mono.empty()) parts.push_back(std::make_shared<corpus::MonolingualSource>(std::move(mono), perturb_rate));
  if (parts.empty()) throw ConfigError("no training data: set 'parallel' and/or 'mono'");
  return std::make_shared<corpus::ConcatSource>(std::move(parts));
}

std::vector<corpus::SentencePair> read_pairs(const std::string& path, const corpus::Vocabulary& vocab) {
  const auto text = corpus::read_parallel(path);
  return nmt::encode_bitext(text, vocab);
}

/// Runs the loop and writes checkpoint plus metrics; shared by both
/// pretraining commands.
void train_and_save(train::PretrainState state, const train::TrainConfig& tc, const corpus::PairSource& source,
                    const ConfigMap& c, cli::RunManifest& m, bool reset_step) {
  const std::string out = required(c, "out");
  const std::string log_path = derived_path(c, "log", out, ".metrics.csv");
  std::vector<corpus::SentencePair> eval_pairs;
  if (const auto e = cli::get_string(c, "eval"); !e.empty()) {
    eval_pairs = read_pairs(e, state.vocab);
    add_inputs(m, {e});
  }
  const train::StepCallback report = [&](const train::StepMetrics& row, train::PretrainState& st) {
    if (tc.eval_every <= 0 || eval_pairs.size() < 2 || (row.step + 1) % tc.eval_every != 0) return;
    const auto r = train::eval_retrieval(st.model, eval_pairs);
    std::printf("step %lld  total %.4f  retrieval x->y %.4f  y->x %.4f\n", static_cast<long long>(row.step + 1),
                row.loss.total, r.accuracy_x2y, r.accuracy_y2x);
  };
  auto res = train::continue_pretrain(std::move(state), tc, source, reset_step, report);
  train::to_checkpoint(res.state).save(out);
  train::write_metrics_csv(log_path, res.metrics);
  m.outputs = {out, log_path};
  if (!res.metrics.empty()) {
    const auto& last = res.metrics.back();
    std::printf("steps run %zu  final total %.6f (l_lm %.6f  l_s %.6f  l_w %.6f)\n", res.metrics.size(), last.loss.total,
                last.loss.l_lm, last.loss.l_s, last.loss.l_w);
  }
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_synth(const ConfigMap& c, cli::RunManifest& m) {
  const auto kind = corpus::parse_mapping_kind(cli::get_string(c, "mapping"));
  const auto n_train = cli::get_int(c, "pairs");
  const auto n_heldout = cli::get_int(c, "heldout");
  const auto seed = cli::get_uint(c, "seed");
  corpus::SynthOptions opts{static_cast<int>(cli::get_int(c, "min-len")), static_cast<int>(cli::get_int(c, "max-len"))};
  const auto synth = corpus::synth_bilingual(static_cast<int>(cli::get_int(c, "vocab-size")),
                                             static_cast<int>(n_train + n_heldout), kind, seed, opts);
  const fs::path dir = required(c, "out-dir");
  fs::create_directories(dir);
  const std::span<const corpus::TextPair> all(synth.pairs);
  corpus::write_parallel(dir / "train.tsv", all.subspan(0, static_cast<std::size_t>(n_train)));
  corpus::write_parallel(dir / "heldout.tsv", all.subspan(static_cast<std::size_t>(n_train)));
  m.seeds = {{"seed", seed}};
  m.outputs = {(dir / "train.tsv").string(), (dir / "heldout.tsv").string()};
  std::printf("wrote %lld training and %lld held-out pairs, vocabulary %d\n", static_cast<long long>(n_train),
              static_cast<long long>(n_heldout), synth.vocab.size());
}

void cmd_pretrain(const ConfigMap& c, cli::RunManifest& m) {
  const auto tc0 = train_config(c);
  std::vector<fs::path> files;
  for (const auto& k : {"parallel", "mono"}) {
    for (const auto& p : paths_of(c, k)) files.emplace_back(p);
  }
  if (files.empty()) throw ConfigError("no training data: set 'parallel' and/or 'mono'");
  for (const auto& f : files) add_inputs(m, {f.string()});
  const auto vocab = corpus::build_vocab(files, static_cast<int>(cli::get_int(c, "min-count")));
  train::TrainConfig tc = tc0;
  tc.encoder = encoder_config(c);
  const auto source = pair_source(c, vocab, tc.perturb_rate);
  m.seeds = {{"seed", tc.seed}};
  train_and_save(train::init_pretrain_state(tc, vocab), tc, *source, c, m, false);
}

void cmd_continue_pretrain(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  add_inputs(m, {ck});
  auto state = train::from_checkpoint(train::Checkpoint::load(ck));
  train::TrainConfig tc = train_config(c);
  tc.encoder = state.model.config();
  for (const auto& k : {"parallel", "mono"}) add_inputs(m, paths_of(c, k));
  const auto source = pair_source(c, state.vocab, tc.perturb_rate);
  const bool reset = cli::get_bool(c, "reset-step");
  m.seeds = {{"seed", reset ? tc.seed : state.seed}};
  train_and_save(std::move(state), tc, *source, c, m, reset);
}

void cmd_finetune_nmt(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  const std::string bitext_path = required(c, "bitext");
  const std::string out = required(c, "out");
  add_inputs(m, {ck, bitext_path});
  auto state = train::from_checkpoint(train::Checkpoint::load(ck));
  nmt::NmtConfig nc;
  nc.decoder.layers = static_cast<int>(cli::get_int(c, "dec-layers"));
  nc.decoder.heads = static_cast<int>(cli::get_int(c, "dec-heads"));
  nc.decoder.ffn_dim = static_cast<int>(cli::get_int(c, "dec-ffn"));
  nc.decoder.max_len = static_cast<int>(cli::get_int(c, "dec-max-len"));
  nc.stage1_steps = cli::get_int(c, "stage1-steps");
  nc.stage2_steps = cli::get_int(c, "stage2-steps");
  nc.batch_size = static_cast<int>(cli::get_int(c, "batch-size"));
  nc.lr = cli::get_double(c, "lr");
  nc.warmup_steps = cli::get_int(c, "warmup");
  nc.schedule = train::parse_schedule(cli::get_string(c, "schedule"));
  nc.lambda = cli::get_double(c, "lambda");
  nc.seed = cli::get_uint(c, "seed");
  const auto bitext = read_pairs(bitext_path, state.vocab);
  auto model = nmt::make_nmt_model(std::move(state.model), state.vocab, nc);
  const auto s1 = nmt::finetune(model, bitext, nmt::Stage::kFrozenEncoder, nc);
  const auto s2 = nmt::finetune(model, bitext, nmt::Stage::kFull, nc);
  nmt::to_checkpoint(model).save(out);
  const std::string log_path = derived_path(c, "log", out, ".metrics.csv");
  {
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    log << "stage,step,loss,lr,encoder_grad_norm\n";
    for (const auto* rows : {&s1, &s2}) {
      for (const auto& r : *rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%lld,%.9g,%.9g,%.9g\n", r.stage == nmt::Stage::kFrozenEncoder ? 1 : 2,
                      static_cast<long long>(r.step), r.loss, r.lr, r.encoder_grad_norm);
        log << buf;
      }
    }
  }
  m.seeds = {{"seed", nc.seed}};
  m.outputs = {out, log_path};
  if (const auto e = cli::get_string(c, "eval"); !e.empty()) {
    add_inputs(m, {e});
    nmt::BeamConfig beam{static_cast<int>(cli::get_int(c, "beam")), cli::get_double(c, "lenpen"),
                         static_cast<int>(cli::get_int(c, "max-len")), corpus::kEos};
    std::printf("BLEU %.2f\n", nmt::evaluate_bleu(model, read_pairs(e, model.vocab), beam));
  }
}

void cmd_finetune_cls(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  const std::string train_path = required(c, "train");
  add_inputs(m, {ck, train_path});
  auto state = train::from_checkpoint(train::Checkpoint::load(ck));
  train::ClassifierConfig cc;
  cc.n_classes = static_cast<int>(cli::get_int(c, "classes"));
  cc.steps = static_cast<int>(cli::get_int(c, "steps"));
  cc.batch_size = static_cast<int>(cli::get_int(c, "batch-size"));
  cc.lr = cli::get_double(c, "lr");
  cc.freeze_encoder = cli::get_bool(c, "freeze-encoder");
  cc.on_projection = cli::get_bool(c, "on-projection");
  cc.seed = cli::get_uint(c, "seed");
  const auto train_set = train::read_labeled_tsv(train_path, state.vocab, cc.n_classes);
  std::vector<train::LabeledExample> heldout;
  if (const auto h = cli::get_string(c, "heldout"); !h.empty()) {
    add_inputs(m, {h});
    heldout = train::read_labeled_tsv(h, state.vocab, cc.n_classes);
  }
  const auto res = train::finetune_classifier(state.model, train_set, heldout, cc);
  m.seeds = {{"seed", cc.seed}};
  if (heldout.empty()) std::printf("trained %d steps; no held-out set given\n", cc.steps);
  else std::printf("held-out accuracy %.4f\n", res.heldout_accuracy);
}

void cmd_eval_retrieval(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  const std::string corpus_path = required(c, "corpus");
  add_inputs(m, {ck, corpus_path});
  auto state = train::from_checkpoint(train::Checkpoint::load(ck));
  const auto pairs = read_pairs(corpus_path, state.vocab);
  const auto r = train::eval_retrieval(state.model, pairs);
  std::printf("pairs %d\nx->y top-1 %.4f  margin %.4f\ny->x top-1 %.4f  margin %.4f\n", r.pairs, r.accuracy_x2y,
              r.margin_x2y, r.accuracy_y2x, r.margin_y2x);
  if (const auto wm = cli::get_int(c, "word-auc-m"); wm > 0) {
    const auto seed = cli::get_uint(c, "seed");
    const auto w = train::eval_word_auc(state.model, pairs, static_cast<int>(wm), seed);
    std::printf("word AUC %.4f over %d pairs\n", w.mean_auc, w.pairs);
    m.seeds = {{"seed", seed}};
  }
}

void cmd_translate(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  const std::string in = required(c, "input");
  const std::string out = required(c, "output");
  add_inputs(m, {ck, in});
  const auto checkpoint = train::Checkpoint::load(ck);
  auto model = nmt::nmt_from_checkpoint(checkpoint);
  std::vector<std::vector<int>> sources;
  {
    std::ifstream f(in);
    if (!f) throw DataError("cannot read " + in);
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      sources.push_back(model.vocab.encode(line));
    }
  }
  nmt::BeamConfig beam{static_cast<int>(cli::get_int(c, "beam")), cli::get_double(c, "lenpen"),
                       static_cast<int>(cli::get_int(c, "max-len")), corpus::kEos};
  std::vector<std::vector<int>> hyps(sources.size());
  std::vector<std::size_t> nonempty;
  std::vector<std::vector<int>> todo;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) continue;
    nonempty.push_back(i);
    todo.push_back(sources[i]);
  }
  const auto done = nmt::translate_all(model, todo, beam);
  for (std::size_t k = 0; k < nonempty.size(); ++k) hyps[nonempty[k]] = done[k];
  std::ofstream o(out, std::ios::binary | std::ios::trunc);
  if (!o) throw DataError("cannot write " + out);
  for (const auto& h : hyps) o << model.vocab.decode(h) << '\n';
  m.outputs = {out};
}

void cmd_embed(const ConfigMap& c, cli::RunManifest& m) {
  const std::string ck = required(c, "checkpoint");
  const std::string in = required(c, "input");
  const std::string out = required(c, "output");
  add_inputs(m, {ck, in});
  auto state = train::from_checkpoint(train::Checkpoint::load(ck));
  std::vector<std::vector<int>> sentences;
  for (const auto& line : corpus::read_monolingual(in)) sentences.push_back(state.vocab.encode(line));
  const auto reprs = train::embed_sentences(state.model, sentences);
  std::ofstream o(out, std::ios::binary | std::ios::trunc);
  if (!o) throw DataError("cannot write " + out);
  for (const auto& r : reprs) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.9g", i ? " " : "", static_cast<double>(r[i]));
      o << buf;
    }
    o << '\n';
  }
  m.outputs = {out};
}

void cmd_bleu(const ConfigMap& c, cli::RunManifest& m) {
  const std::string hyp = required(c, "hyp");
  const std::string ref = required(c, "ref");
  add_inputs(m, {hyp, ref});
  auto lines = [](const std::string& p) {
    std::ifstream f(p);
    if (!f) throw DataError("cannot read " + p);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(f, line)) out.push_back(line);
    return out;
  };
  const auto h = lines(hyp);
  const auto r = lines(ref);
  const auto res = nmt::corpus_bleu(std::span<const std::string>(h), std::span<const std::string>(r),
                                    static_cast<int>(cli::get_int(c, "max-ngram")));
  std::printf("BLEU = %.2f, ", res.bleu);
  for (std::size_t i = 0; i < res.precisions.size(); ++i) std::printf("%s%.1f", i ? "/" : "", 100.0 * res.precisions[i]);
  std::printf(" (BP=%.3f, hyp_len=%zu, ref_len=%zu)\n", res.brevity_penalty, res.hyp_length, res.ref_length);
}

std::vector<Command> commands() {
  const Option out{"out", "", "output checkpoint"};
  const Option manifest{"manifest", "", "manifest path (default <output>.manifest.json)"};
  const Option seed{"seed", "1", "seed"};
  return {
      {"synth", "write a synthetic bilingual corpus",
       {{"vocab-size", "200", "vocabulary size including specials"},
        {"pairs", "2000", "training pairs"},
        {"heldout", "256", "held-out pairs"},
        {"mapping", "map+reverse", "identity | map | map+reverse"},
        {"min-len", "4", "shortest sentence"},
        {"max-len", "10", "longest sentence"},
        {"out-dir", "", "directory for train.tsv and heldout.tsv"},
        seed,
        manifest},
       cmd_synth},
      {"pretrain", "pretrain an encoder",
       concat(training_options(), encoder_options(), std::vector<Option>{out, manifest}), cmd_pretrain},
      {"continue-pretrain", "second pretraining phase from a checkpoint",
       concat(training_options(),
              std::vector<Option>{{"checkpoint", "", "input checkpoint"},
                                  {"reset-step", "false", "restart step counter, optimizer and seed", true},
                                  out,
                                  manifest}),
       cmd_continue_pretrain},
      {"finetune-nmt", "two-stage translation fine-tuning",
       concat(std::vector<Option>{{"checkpoint", "", "pretrained encoder checkpoint"},
                                  {"bitext", "", "tab-separated training bitext"},
                                  {"eval", "", "held-out bitext scored with BLEU after training"},
                                  {"stage1-steps", "1000", "frozen-encoder updates"},
                                  {"stage2-steps", "-1", "full-model updates (-1: 20% of stage 1)"},
                                  {"batch-size", "16", "pairs per update"},
                                  {"lr", "1e-3", "peak learning rate"},
                                  {"warmup", "100", "warmup steps"},
                                  {"schedule", "inverse-sqrt", "invert-linear | inverse-sqrt"},
                                  {"lambda", "1", "fusion weight"},
                                  {"dec-layers", "2", "decoder layers"},
                                  {"dec-heads", "4", "decoder heads"},
                                  {"dec-ffn", "256", "decoder feed-forward width"},
                                  {"dec-max-len", "64", "longest decoder input"},
                                  {"log", "", "metrics CSV (default <out>.metrics.csv)"},
                                  seed,
                                  out,
                                  manifest},
              beam_options()),
       cmd_finetune_nmt},
      {"finetune-cls", "train a classification head",
       {{"checkpoint", "", "pretrained encoder checkpoint"},
        {"train", "", "label<TAB>text training file"},
        {"heldout", "", "label<TAB>text evaluation file"},
        {"classes", "2", "number of classes"},
        {"steps", "500", "updates"},
        {"batch-size", "8", "examples per update"},
        {"lr", "1e-3", "learning rate"},
        {"freeze-encoder", "false", "train the head only", true},
        {"on-projection", "false", "head reads the projected representation", true},
        seed,
        manifest},
       cmd_finetune_cls},
      {"eval-retrieval", "top-1 cross-lingual retrieval accuracy",
       {{"checkpoint", "", "encoder checkpoint"},
        {"corpus", "", "tab-separated parallel corpus"},
        {"word-auc-m", "0", "also report word-level AUC with this many negatives"},
        seed,
        manifest},
       cmd_eval_retrieval},
      {"translate", "beam-search translation",
       concat(std::vector<Option>{{"checkpoint", "", "fine-tuned translation checkpoint"},
                                  {"input", "", "one source sentence per line"},
                                  {"output", "", "hypotheses file"},
                                  manifest},
              beam_options()),
       cmd_translate},
      {"embed", "sentence representations, one vector per line",
       {{"checkpoint", "", "encoder checkpoint"}, {"input", "", "one sentence per line"}, {"output", "", "vectors file"}, manifest},
       cmd_embed},
      {"bleu", "corpus BLEU of a hypothesis file against a reference file",
       {{"hyp", "", "hypotheses"}, {"ref", "", "references"}, {"max-ngram", "4", "longest n-gram"}, manifest},
       cmd_bleu},
  };
}

std::string manifest_path(const Command& cmd, const ConfigMap& c, const cli::RunManifest& m) {
  if (const auto it = c.find("manifest"); it != c.end() && !it->second.empty()) return it->second;
  if (!m.outputs.empty()) return m.outputs.front() + ".manifest.json";
  return cmd.name + ".manifest.json";
}

int run(const Command& cmd, ConfigMap resolved) {
  cli::RunManifest manifest{cmd.name, resolved, {}, {}, {}, 0.0, cli::git_describe()};
  const auto start = std::chrono::steady_clock::now();
  cmd.run(resolved, manifest);
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  cli::write_manifest(manifest_path(cmd, resolved, manifest), manifest);
  return kOk;
}

int exit_code_of(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumeric;
  if (dynamic_cast<const Error*>(&e)) return kData;
  return kData;
}

}  // namespace

int main(int argc, char** argv) {
  const auto cmds = commands();
  CLI::App app{"hierarchical contrastive cross-lingual pretraining"};
  app.require_subcommand(1);
  std::string rerun_path;
  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
  rerun->add_option("manifest", rerun_path, "manifest JSON")->required();

  struct Bound {
    CLI::App* sub;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> opts;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : cmds) {
    auto b = std::make_unique<Bound>();
    b->sub = app.add_subcommand(cmd.name, cmd.help);
    b->sub->add_option("--config", b->config_path, "key = value settings file");
    for (const auto& o : cmd.options) {
      if (o.flag) {
        b->opts[o.key] = b->sub->add_flag("--" + o.key, b->flags[o.key], o.help);
      } else {
        b->opts[o.key] = b->sub->add_option("--" + o.key, b->values[o.key], o.help + " [" + o.fallback + "]");
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (rerun->parsed()) {
      const auto m = cli::read_manifest(rerun_path);
      for (const auto& cmd : cmds) {
        if (cmd.name == m.command) return run(cmd, m.config);
      }
      throw ConfigError("manifest names unknown command '" + m.command + "'");
    }
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const auto& cmd = cmds[i];
      auto& b = *bound[i];
      if (!b.sub->parsed()) continue;
      ConfigMap resolved;
      std::set<std::string> known;
      for (const auto& o : cmd.options) {
        resolved[o.key] = o.fallback;
        known.insert(o.key);
      }
      if (!b.config_path.empty()) {
        const auto file = cli::read_config_file(b.config_path);
        cli::require_known_keys(file, known);
        for (const auto& [k, v] : file) resolved[k] = v;
      }
      for (const auto& o : cmd.options) {
        if (b.opts[o.key]->count() == 0) continue;
        resolved[o.key] = o.flag ? (b.flags[o.key] ? "true" : "false") : b.values[o.key];
      }
      return run(cmd, resolved);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_of(e);
  }
  return kUsage;
}
