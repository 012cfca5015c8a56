#include "hictl/encoder/encoder.hpp"

#include <string>

#include "hictl/corpus/batch.hpp"
#include "hictl/error.hpp"

namespace hictl::enc {

using num::Var;

namespace {

constexpr double kInitStd = 0.02;

void require_positive(int v, const char* name) {
  if (v <= 0) throw ConfigError(std::string("encoder ") + name + " must be positive, got " + std::to_string(v));
}

std::string layer_prefix(int l) { return "encoder/layer" + std::to_string(l) + "/"; }

}  // namespace

void EncoderConfig::validate() const {
  require_positive(layers, "layers");
  require_positive(hidden_dim, "hidden_dim");
  require_positive(heads, "heads");
  require_positive(ffn_dim, "ffn_dim");
  require_positive(max_seq_len, "max_seq_len");
  require_positive(vocab_size, "vocab_size");
  if (projection_dim < 0) throw ConfigError("encoder projection_dim must be >= 0");
  if (hidden_dim % heads != 0) {
    throw ConfigError("encoder hidden_dim " + std::to_string(hidden_dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("encoder dropout must be in [0, 1)");
}

std::size_t parameter_count(const EncoderConfig& cfg) {
  const std::size_t V = cfg.vocab_size, S = cfg.max_seq_len, H = cfg.hidden_dim, F = cfg.ffn_dim,
                    L = cfg.layers, P = cfg.projection_width();
  return V * H + S * H + 2 * H + L * (4 * H * H + 4 * H + 2 * H * F + F + H + 4 * H) + H * P + P + V;
}

template <class T>
num::ParameterStore<T> Encoder<T>::initial_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int H = cfg.hidden_dim, F = cfg.ffn_dim, P = cfg.projection_width();
  num::Rng rng(seed);
  num::ParameterStore<T> ps;
  auto ones = [](int n) { return num::Tensor<T>({n}, T(1)); };
  auto zeros = [](int n) { return num::Tensor<T>({n}); };
  ps.add_normal("encoder/embed/token", {cfg.vocab_size, H}, kInitStd, rng);
  ps.add_normal("encoder/embed/position", {cfg.max_seq_len, H}, kInitStd, rng);
  ps.add("encoder/embed/ln/gamma", ones(H));
  ps.add("encoder/embed/ln/beta", zeros(H));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* m : {"q", "k", "v", "o"}) {
      ps.add_normal(p + "attn/w" + m, {H, H}, kInitStd, rng);
      ps.add(p + "attn/b" + m, zeros(H));
    }
    ps.add(p + "ln1/gamma", ones(H));
    ps.add(p + "ln1/beta", zeros(H));
    ps.add_normal(p + "ffn/w1", {H, F}, kInitStd, rng);
    ps.add(p + "ffn/b1", zeros(F));
    ps.add_normal(p + "ffn/w2", {F, H}, kInitStd, rng);
    ps.add(p + "ffn/b2", zeros(H));
    ps.add(p + "ln2/gamma", ones(H));
    ps.add(p + "ln2/beta", zeros(H));
  }
  ps.add_normal("encoder/proj/w", {H, P}, kInitStd, rng);
  ps.add("encoder/proj/b", zeros(P));
  ps.add("encoder/lm/bias", zeros(cfg.vocab_size));
  return ps;
}

template <class T>
typename Encoder<T>::Ids Encoder<T>::resolve(const EncoderConfig& cfg, const num::ParameterStore<T>& params) {
  // The reference layout is built with the same routine as fresh weights.
  const auto layout = initial_params(cfg, 0);
  if (layout.size() != params.size()) {
    throw ConfigError("encoder expects " + std::to_string(layout.size()) + " parameter tensors, got " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& want = layout[static_cast<int>(i)];
    const auto& got = params[static_cast<int>(i)];
    if (want.name != got.name) throw ConfigError("parameter " + std::to_string(i) + " is '" + got.name +
                                                 "', expected '" + want.name + "'");
    if (want.value.dims() != got.value.dims()) {
      throw ConfigError("parameter '" + got.name + "' has dims " + num::shape_string(got.value.dims()) +
                        ", config implies " + num::shape_string(want.value.dims()));
    }
  }
  auto id = [&](const std::string& name) { return *params.find(name); };
  Ids ids{};
  ids.tok = id("encoder/embed/token");
  ids.pos = id("encoder/embed/position");
  ids.eln_g = id("encoder/embed/ln/gamma");
  ids.eln_b = id("encoder/embed/ln/beta");
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = layer_prefix(l);
    ids.layers.push_back(LayerIds{id(p + "attn/wq"), id(p + "attn/bq"), id(p + "attn/wk"), id(p + "attn/bk"),
                                  id(p + "attn/wv"), id(p + "attn/bv"), id(p + "attn/wo"), id(p + "attn/bo"),
                                  id(p + "ln1/gamma"), id(p + "ln1/beta"), id(p + "ffn/w1"), id(p + "ffn/b1"),
                                  id(p + "ffn/w2"), id(p + "ffn/b2"), id(p + "ln2/gamma"), id(p + "ln2/beta")});
  }
  ids.proj_w = id("encoder/proj/w");
  ids.proj_b = id("encoder/proj/b");
  ids.lm_bias = id("encoder/lm/bias");
  return ids;
}

template <class T>
Encoder<T>::Encoder(const EncoderConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), params_(initial_params(cfg, seed)), ids_(resolve(cfg, params_)) {}

template <class T>
Encoder<T>::Encoder(const EncoderConfig& cfg, num::ParameterStore<T> params)
    : cfg_(cfg), params_(std::move(params)), ids_(resolve(cfg, params_)) {}

template <class T>
void Encoder<T>::check_tokens(std::span<const int> tokens) const {
  if (tokens.empty()) throw DataError("encoder input is empty");
  if (static_cast<int>(tokens.size()) > cfg_.max_seq_len) {
    throw DataError("sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                    std::to_string(cfg_.max_seq_len));
  }
  for (int t : tokens) {
    if (t < 0 || t >= cfg_.vocab_size) {
      throw DataError("token id " + std::to_string(t) + " outside vocabulary of size " + std::to_string(cfg_.vocab_size));
    }
  }
}

template <class T>
Var Encoder<T>::maybe_dropout(num::Tape<T>& tp, Var x, num::Rng* rng) {
  if (cfg_.dropout <= 0.0 || rng == nullptr) return x;
  return num::ops::dropout(tp, x, cfg_.dropout, *rng);
}

template <class T>
Var Encoder<T>::encode(num::Tape<T>& tp, std::span<const int> tokens, num::Rng* dropout_rng) {
  namespace ops = num::ops;
  check_tokens(tokens);
  auto P = [&](int id) { return tp.param(params_[id]); };
  std::vector<int> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

  Var h = ops::add(tp, ops::gather_rows(tp, P(ids_.tok), tokens), ops::gather_rows<T>(tp, P(ids_.pos), positions));
  h = ops::layer_norm(tp, h, P(ids_.eln_g), P(ids_.eln_b));
  h = maybe_dropout(tp, h, dropout_rng);
  for (const LayerIds& L : ids_.layers) {
    const Var q = ops::linear(tp, h, P(L.wq), P(L.bq));
    const Var k = ops::linear(tp, h, P(L.wk), P(L.bk));
    const Var v = ops::linear(tp, h, P(L.wv), P(L.bv));
    Var a = ops::linear(tp, ops::attention(tp, q, k, v, cfg_.heads, false), P(L.wo), P(L.bo));
    a = maybe_dropout(tp, a, dropout_rng);
    h = ops::layer_norm(tp, ops::add(tp, h, a), P(L.ln1_g), P(L.ln1_b));
    Var f = ops::linear(tp, ops::gelu(tp, ops::linear(tp, h, P(L.w1), P(L.b1))), P(L.w2), P(L.b2));
    f = maybe_dropout(tp, f, dropout_rng);
    h = ops::layer_norm(tp, ops::add(tp, h, f), P(L.ln2_g), P(L.ln2_b));
  }
  return h;
}

template <class T>
Var Encoder<T>::project(num::Tape<T>& tp, Var hidden) {
  return num::ops::linear(tp, hidden, tp.param(params_[ids_.proj_w]), tp.param(params_[ids_.proj_b]));
}

template <class T>
Var Encoder<T>::sentence_repr(num::Tape<T>& tp, std::span<const int> tokens, num::Rng* dropout_rng) {
  if (tokens.empty() || tokens.front() != corpus::kCls) throw DataError("sentence_repr input must start with [CLS]");
  const Var h = encode(tp, tokens, dropout_rng);
  return project(tp, num::ops::select_row(tp, h, 0));
}

template <class T>
Var Encoder<T>::encode_pair(num::Tape<T>& tp, std::span<const int> x, std::span<const int> y) {
  const auto tokens = corpus::concat_pair(x, y);
  return sentence_repr(tp, tokens);
}

template <class T>
Var Encoder<T>::lm_logits(num::Tape<T>& tp, Var hidden_rows) {
  const Var logits = num::ops::matmul_nt(tp, hidden_rows, tp.param(params_[ids_.tok]));
  return num::ops::add_row(tp, logits, tp.param(params_[ids_.lm_bias]));
}

template <class T>
num::Tensor<T> Encoder<T>::encode(std::span<const int> tokens) {
  num::Tape<T> tp(false);
  return tp.value(encode(tp, tokens));
}

template <class T>
num::Tensor<T> Encoder<T>::sentence_repr(std::span<const int> tokens) {
  num::Tape<T> tp(false);
  return tp.value(sentence_repr(tp, tokens));
}

template <class T>
num::Tensor<T> Encoder<T>::encode_pair(std::span<const int> x, std::span<const int> y) {
  num::Tape<T> tp(false);
  return tp.value(encode_pair(tp, x, y));
}

template <class T>
ClassifierHead<T>::ClassifierHead(int input_dim, int n_classes, bool on_proj, std::uint64_t seed)
    : on_projection(on_proj) {
  if (input_dim <= 0 || n_classes <= 0) throw ConfigError("classifier head dims must be positive");
  num::Rng rng(seed);
  params.add_normal("cls/w", {input_dim, n_classes}, kInitStd, rng);
  params.add("cls/b", num::Tensor<T>({n_classes}));
}

template <class T>
Var classify(num::Tape<T>& tp, Encoder<T>& encoder, ClassifierHead<T>& head, std::span<const int> tokens) {
  if (tokens.empty() || tokens.front() != corpus::kCls) throw DataError("classify input must start with [CLS]");
  Var r = num::ops::select_row(tp, encoder.encode(tp, tokens), 0);
  if (head.on_projection) r = encoder.project(tp, r);
  const int width = static_cast<int>(tp.value(r).size());
  if (width != head.input_dim()) {
    throw DimError("classifier head expects width " + std::to_string(head.input_dim()) + ", representation has " +
                   std::to_string(width));
  }
  return num::ops::linear(tp, r, tp.param(head.params[0]), tp.param(head.params[1]));
}

template class Encoder<float>;
template class Encoder<double>;
template struct ClassifierHead<float>;
template struct ClassifierHead<double>;
template Var classify<float>(num::Tape<float>&, Encoder<float>&, ClassifierHead<float>&, std::span<const int>);
template Var classify<double>(num::Tape<double>&, Encoder<double>&, ClassifierHead<double>&, std::span<const int>);

}  // namespace hictl::enc
