#pragma once

#include <span>

#include "hictl/numerics/tape.hpp"

namespace hictl::nmt {

/// Fused logit of a sentinel word when fusion is active.
inline constexpr double kSentinelLogit = -1e9;

/// [PAD], [CLS], [SEP] and [MASK] never receive a similarity bonus.
bool is_fusion_sentinel(int id);

template <class T>
struct FusionState {
  num::Tensor<T> sim;  // one cosine per vocabulary word, -inf for sentinels
  double lambda = 1.0;
};

/// Cosine of cls_repr with every row of the embedding table; sentinel ids
/// get -inf. Throws DegenerateInputError on a zero-norm non-sentinel row.
template <class T>
num::Tensor<T> target_similarities(std::span<const T> cls_repr, const num::Tensor<T>& table);

/// Differentiable form of target_similarities.
template <class T>
num::Var target_similarities(num::Tape<T>& tp, num::Var cls_repr, num::Var table);

/// logits + lambda * sim on every row. Columns where sim is -inf become
/// kSentinelLogit; lambda 0 returns the logits unchanged.
template <class T>
num::Tensor<T> fuse_logits(const num::Tensor<T>& logits, const FusionState<T>& fusion);

template <class T>
num::Var fuse_logits(num::Tape<T>& tp, num::Var logits, num::Var sim, double lambda);

}  // namespace hictl::nmt
