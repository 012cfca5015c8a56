#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hictl/numerics/ops.hpp"
#include "hictl/numerics/params.hpp"

namespace hictl::nmt {

struct DecoderConfig {
  int layers = 2;
  int hidden_dim = 64;
  int heads = 4;
  int ffn_dim = 256;
  /// Longest decoder input ([BOS] plus generated tokens).
  int max_len = 64;
  int vocab_size = 0;

  void validate() const;
  bool operator==(const DecoderConfig&) const = default;
};

/// Post-norm transformer decoder: causal self-attention, attention over the
/// encoder states, feed-forward. Output projection is tied to the decoder's
/// own target embedding table.
template <class T>
class Decoder {
 public:
  Decoder(const DecoderConfig& cfg, std::uint64_t seed);
  Decoder(const DecoderConfig& cfg, num::ParameterStore<T> params);

  const DecoderConfig& config() const { return cfg_; }
  num::ParameterStore<T>& params() { return params_; }
  const num::ParameterStore<T>& params() const { return params_; }

  /// Logits [len, vocab] for every prefix position of `inputs`, attending
  /// to `memory` [src_len, hidden].
  num::Var logits(num::Tape<T>& tp, std::span<const int> inputs, num::Var memory);

 private:
  static num::ParameterStore<T> initial_params(const DecoderConfig& cfg, std::uint64_t seed);
  void check_layout() const;

  DecoderConfig cfg_;
  num::ParameterStore<T> params_;
};

}  // namespace hictl::nmt
