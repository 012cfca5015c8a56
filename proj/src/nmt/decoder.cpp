#include "hictl/nmt/decoder.hpp"

#include <string>

#include "hictl/error.hpp"

namespace hictl::nmt {

using num::Var;
namespace ops = num::ops;

namespace {

constexpr double kInitStd = 0.02;

}  // namespace

void DecoderConfig::validate() const {
  if (layers <= 0 || hidden_dim <= 0 || heads <= 0 || ffn_dim <= 0 || max_len <= 0 || vocab_size <= 0) {
    throw ConfigError("decoder dimensions must be positive");
  }
  if (hidden_dim % heads != 0) throw ConfigError("decoder hidden_dim is not divisible by heads");
}

template <class T>
num::ParameterStore<T> Decoder<T>::initial_params(const DecoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int H = cfg.hidden_dim, F = cfg.ffn_dim;
  num::Rng rng(seed);
  num::ParameterStore<T> ps;
  auto ones = [](int n) { return num::Tensor<T>({n}, T(1)); };
  auto zeros = [](int n) { return num::Tensor<T>({n}); };
  ps.add_normal("decoder/embed/token", {cfg.vocab_size, H}, kInitStd, rng);
  ps.add_normal("decoder/embed/position", {cfg.max_len, H}, kInitStd, rng);
  ps.add("decoder/embed/ln/gamma", ones(H));
  ps.add("decoder/embed/ln/beta", zeros(H));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "decoder/layer" + std::to_string(l) + "/";
    for (const char* block : {"self", "cross"}) {
      for (const char* m : {"q", "k", "v", "o"}) {
        ps.add_normal(p + block + "/w" + m, {H, H}, kInitStd, rng);
        ps.add(p + block + "/b" + m, zeros(H));
      }
      ps.add(p + block + "/ln/gamma", ones(H));
      ps.add(p + block + "/ln/beta", zeros(H));
    }
    ps.add_normal(p + "ffn/w1", {H, F}, kInitStd, rng);
    ps.add(p + "ffn/b1", zeros(F));
    ps.add_normal(p + "ffn/w2", {F, H}, kInitStd, rng);
    ps.add(p + "ffn/b2", zeros(H));
    ps.add(p + "ffn/ln/gamma", ones(H));
    ps.add(p + "ffn/ln/beta", zeros(H));
  }
  ps.add("decoder/out/bias", zeros(cfg.vocab_size));
  return ps;
}

template <class T>
void Decoder<T>::check_layout() const {
  const auto layout = initial_params(cfg_, 0);
  if (layout.size() != params_.size()) throw ConfigError("decoder parameter count does not match its config");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& a = layout[static_cast<int>(i)];
    const auto& b = params_[static_cast<int>(i)];
    if (a.name != b.name || a.value.dims() != b.value.dims()) {
      throw ConfigError("decoder parameter '" + b.name + "' does not match the layout for its config");
    }
  }
}

template <class T>
Decoder<T>::Decoder(const DecoderConfig& cfg, std::uint64_t seed) : cfg_(cfg), params_(initial_params(cfg, seed)) {}

template <class T>
Decoder<T>::Decoder(const DecoderConfig& cfg, num::ParameterStore<T> params) : cfg_(cfg), params_(std::move(params)) {
  check_layout();
}

template <class T>
Var Decoder<T>::logits(num::Tape<T>& tp, std::span<const int> inputs, Var memory) {
  if (inputs.empty()) throw DataError("decoder input is empty");
  if (static_cast<int>(inputs.size()) > cfg_.max_len) {
    throw DataError("decoder input length " + std::to_string(inputs.size()) + " exceeds max_len " +
                    std::to_string(cfg_.max_len));
  }
  for (int t : inputs) {
    if (t < 0 || t >= cfg_.vocab_size) throw DataError("decoder token id " + std::to_string(t) + " out of range");
  }
  if (tp.value(memory).cols() != cfg_.hidden_dim) throw DimError("encoder states do not match decoder hidden_dim");
  // Parameters are consumed in registration order.
  int next = 0;
  auto P = [&]() { return tp.param(params_[next++]); };
  std::vector<int> positions(inputs.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

  const Var table = P();
  Var h = ops::add(tp, ops::gather_rows(tp, table, inputs), ops::gather_rows<T>(tp, P(), positions));
  {
    const Var g = P(), b = P();
    h = ops::layer_norm(tp, h, g, b);
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    for (bool cross : {false, true}) {
      const Var wq = P(), bq = P(), wk = P(), bk = P(), wv = P(), bv = P(), wo = P(), bo = P();
      const Var kv_src = cross ? memory : h;
      const Var q = ops::linear(tp, h, wq, bq);
      const Var k = ops::linear(tp, kv_src, wk, bk);
      const Var v = ops::linear(tp, kv_src, wv, bv);
      const Var a = ops::linear(tp, ops::attention(tp, q, k, v, cfg_.heads, !cross), wo, bo);
      const Var g = P(), b = P();
      h = ops::layer_norm(tp, ops::add(tp, h, a), g, b);
    }
    const Var w1 = P(), b1 = P(), w2 = P(), b2 = P();
    const Var f = ops::linear(tp, ops::gelu(tp, ops::linear(tp, h, w1, b1)), w2, b2);
    const Var g = P(), b = P();
    h = ops::layer_norm(tp, ops::add(tp, h, f), g, b);
  }
  const Var bias = P();
  return ops::add_row(tp, ops::matmul_nt(tp, h, table), bias);
}

template class Decoder<float>;
template class Decoder<double>;

}  // namespace hictl::nmt
