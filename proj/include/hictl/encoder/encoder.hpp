#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hictl/numerics/ops.hpp"
#include "hictl/numerics/params.hpp"
#include "hictl/numerics/tape.hpp"

namespace hictl::enc {

struct EncoderConfig {
  int layers = 2;
  int hidden_dim = 64;
  int heads = 4;
  int ffn_dim = 256;
  int max_seq_len = 64;
  int vocab_size = 0;
  /// Width of the sentence projection; 0 means hidden_dim.
  int projection_dim = 0;
  double dropout = 0.0;

  int projection_width() const { return projection_dim > 0 ? projection_dim : hidden_dim; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Closed-form number of scalars:
///   V*H + S*H + 2H                      embeddings + embedding norm
///   + L * (4H^2 + 4H                    attention projections
///          + 2HF + F + H                feed-forward
///          + 4H)                        two layer norms
///   + H*P + P                           sentence projection
///   + V                                 output bias of the tied LM head
std::size_t parameter_count(const EncoderConfig& cfg);

/// Post-norm transformer encoder with learned positions, a linear sentence
/// projection on the first position and a tied LM head.
template <class T>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, std::uint64_t seed);
  /// Adopts existing parameters; names and dims must match the layout for cfg.
  Encoder(const EncoderConfig& cfg, num::ParameterStore<T> params);

  const EncoderConfig& config() const { return cfg_; }
  num::ParameterStore<T>& params() { return params_; }
  const num::ParameterStore<T>& params() const { return params_; }

  num::Var token_table(num::Tape<T>& tp) { return tp.param(params_[ids_.tok]); }

  /// Final hidden states [len, hidden]. `dropout_rng` is only consulted when
  /// the config enables dropout.
  num::Var encode(num::Tape<T>& tp, std::span<const int> tokens, num::Rng* dropout_rng = nullptr);
  /// f applied to a hidden row (or rows).
  num::Var project(num::Tape<T>& tp, num::Var hidden);
  /// f(first row of encode(tokens)); tokens must start with [CLS].
  num::Var sentence_repr(num::Tape<T>& tp, std::span<const int> tokens, num::Rng* dropout_rng = nullptr);
  /// sentence_repr of [CLS] x [SEP] y [SEP].
  num::Var encode_pair(num::Tape<T>& tp, std::span<const int> x, std::span<const int> y);
  /// Vocabulary logits hidden * E^T + bias for the given hidden rows.
  num::Var lm_logits(num::Tape<T>& tp, num::Var hidden_rows);

  num::Tensor<T> encode(std::span<const int> tokens);
  num::Tensor<T> sentence_repr(std::span<const int> tokens);
  num::Tensor<T> encode_pair(std::span<const int> x, std::span<const int> y);

  template <class U>
  Encoder<U> cast() const {
    return Encoder<U>(cfg_, params_.template cast<U>());
  }

 private:
  struct LayerIds {
    int wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  struct Ids {
    int tok, pos, eln_g, eln_b, proj_w, proj_b, lm_bias;
    std::vector<LayerIds> layers;
  };

  void check_tokens(std::span<const int> tokens) const;
  num::Var maybe_dropout(num::Tape<T>& tp, num::Var x, num::Rng* rng);
  static num::ParameterStore<T> initial_params(const EncoderConfig& cfg, std::uint64_t seed);
  static Ids resolve(const EncoderConfig& cfg, const num::ParameterStore<T>& params);

  EncoderConfig cfg_;
  num::ParameterStore<T> params_;
  Ids ids_;
};

/// Linear classification layer on the [CLS] state, either before or after
/// the sentence projection.
template <class T>
struct ClassifierHead {
  ClassifierHead(int input_dim, int n_classes, bool on_projection, std::uint64_t seed);

  int n_classes() const { return params[0].value.dims()[1]; }
  int input_dim() const { return params[0].value.dims()[0]; }

  bool on_projection;
  num::ParameterStore<T> params;  // "cls/w" [in, classes], "cls/b" [classes]
};

/// Unnormalised class scores [n_classes]. Throws DimError when the head
/// width does not match the chosen representation.
template <class T>
num::Var classify(num::Tape<T>& tp, Encoder<T>& encoder, ClassifierHead<T>& head, std::span<const int> tokens);

}  // namespace hictl::enc
