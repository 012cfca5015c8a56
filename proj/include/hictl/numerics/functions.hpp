#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "hictl/numerics/detail/kernel_rows.hpp"
#include "hictl/numerics/tensor.hpp"

namespace hictl::num {

/// u.v / (|u| |v|). Throws DegenerateInputError if either norm is zero.
template <class T>
T cosine(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size()) throw DimError("cosine: vectors of different length");
  const int n = static_cast<int>(u.size());
  const T uv = kernels::detail::dot(u.data(), v.data(), n);
  const T uu = kernels::detail::dot(u.data(), u.data(), n);
  const T vv = kernels::detail::dot(v.data(), v.data(), n);
  if (!(uu > T(0)) || !(vv > T(0))) throw DegenerateInputError("cosine similarity of a zero-norm vector");
  const T c = uv / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, T(-1), T(1));
}

template <class T>
T cosine(const Tensor<T>& u, const Tensor<T>& v) {
  require_same_dims(u.dims(), v.dims(), "cosine");
  return cosine<T>(u.span(), v.span());
}

/// Max-subtracted softmax of a vector.
template <class T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (!x.all_finite()) throw NumericalError("softmax: non-finite input");
  Tensor<T> out = x;
  kernels::detail::softmax_row(out.data(), static_cast<int>(out.size()));
  return out;
}

/// GELU, tanh approximation.
template <class T>
T gelu(T x) {
  return kernels::detail::gelu_scalar(x);
}

}  // namespace hictl::num
