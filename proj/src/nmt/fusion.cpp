#include "hictl/nmt/fusion.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hictl/corpus/vocab.hpp"
#include "hictl/error.hpp"
#include "hictl/numerics/functions.hpp"
#include "hictl/numerics/ops.hpp"

namespace hictl::nmt {

using num::Tape;
using num::Tensor;
using num::Var;

bool is_fusion_sentinel(int id) {
  return id == corpus::kPad || id == corpus::kCls || id == corpus::kSep || id == corpus::kMask;
}

template <class T>
Tensor<T> target_similarities(std::span<const T> cls_repr, const Tensor<T>& table) {
  if (table.rank() != 2 || static_cast<std::size_t>(table.cols()) != cls_repr.size()) {
    throw DimError("target_similarities: representation width does not match embedding rows");
  }
  Tensor<T> out({table.rows()});
  for (int w = 0; w < table.rows(); ++w) {
    out[static_cast<std::size_t>(w)] =
        is_fusion_sentinel(w) ? -std::numeric_limits<T>::infinity() : num::cosine<T>(cls_repr, table.row(w));
  }
  return out;
}

template <class T>
Var target_similarities(Tape<T>& tp, Var cls_repr, Var table) {
  if (tp.value(cls_repr).rank() != 1) throw DimError("target_similarities: expected a single representation");
  const Var cos = num::ops::cosine_matrix(tp, cls_repr, table);
  Tensor<T> out = tp.value(cos);
  for (std::size_t w = 0; w < out.size(); ++w) {
    if (is_fusion_sentinel(static_cast<int>(w))) out[w] = -std::numeric_limits<T>::infinity();
  }
  const int out_id = static_cast<int>(tp.size());
  return tp.push(std::move(out), {cos}, [cos, out_id](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    auto& gc = t.grad_acc(cos);
    for (std::size_t w = 0; w < g.size(); ++w) {
      if (!is_fusion_sentinel(static_cast<int>(w))) gc[w] += g[w];
    }
  });
}

template <class T>
Tensor<T> fuse_logits(const Tensor<T>& logits, const FusionState<T>& fusion) {
  Tape<T> tp(false);
  return tp.value(fuse_logits(tp, tp.constant(logits), tp.constant(fusion.sim), fusion.lambda));
}

template <class T>
Var fuse_logits(Tape<T>& tp, Var logits, Var sim, double lambda) {
  if (lambda == 0.0) return logits;
  const auto& lv = tp.value(logits);
  const auto& sv = tp.value(sim);
  const int v = lv.cols();
  if (sv.rank() != 1 || static_cast<int>(sv.size()) != v) {
    throw DimError("fuse_logits: " + num::shape_string(lv.dims()) + " logits with " + num::shape_string(sv.dims()) +
                   " similarities");
  }
  const T lam = static_cast<T>(lambda);
  std::vector<char> sentinel(static_cast<std::size_t>(v));
  for (int w = 0; w < v; ++w) sentinel[static_cast<std::size_t>(w)] = std::isinf(sv[static_cast<std::size_t>(w)]) && sv[static_cast<std::size_t>(w)] < 0;
  Tensor<T> out = lv;
  for (int r = 0; r < lv.rows(); ++r) {
    auto row = out.row(r);
    for (int w = 0; w < v; ++w) {
      const auto j = static_cast<std::size_t>(w);
      row[j] = sentinel[j] ? static_cast<T>(kSentinelLogit) : row[j] + lam * sv[j];
    }
  }
  const int rows = lv.rows();
  const int out_id = static_cast<int>(tp.size());
  return tp.push(std::move(out), {logits, sim}, [=, sentinel = std::move(sentinel)](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    const bool to_logits = t.requires_grad(logits), to_sim = t.requires_grad(sim);
    T* gl = to_logits ? t.grad_acc(logits).data() : nullptr;
    T* gs = to_sim ? t.grad_acc(sim).data() : nullptr;
    for (int r = 0; r < rows; ++r) {
      for (int w = 0; w < v; ++w) {
        if (sentinel[static_cast<std::size_t>(w)]) continue;
        const T gi = g[static_cast<std::size_t>(r) * v + w];
        if (gl) gl[static_cast<std::size_t>(r) * v + w] += gi;
        if (gs) gs[w] += lam * gi;
      }
    }
  });
}

#define HICTL_INSTANTIATE(T)                                                          \
  template Tensor<T> target_similarities<T>(std::span<const T>, const Tensor<T>&);  \
  template Var target_similarities<T>(Tape<T>&, Var, Var);                          \
  template Tensor<T> fuse_logits<T>(const Tensor<T>&, const FusionState<T>&);       \
  template Var fuse_logits<T>(Tape<T>&, Var, Var, double);

HICTL_INSTANTIATE(float)
HICTL_INSTANTIATE(double)
#undef HICTL_INSTANTIATE

}  // namespace hictl::nmt
