#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hictl/numerics/params.hpp"

namespace hictl::num {

template <class T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor<T>> m;  // one per parameter, in store order
  std::vector<Tensor<T>> v;
};

/// One bias-corrected Adam update of a single tensor. `step` is the 1-based
/// index of this update.
template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 std::int64_t step, double beta1, double beta2, double epsilon, double lr) {
  if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size()) {
    throw DimError("adam_update: parameter, gradient and moment sizes differ");
  }
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    const double mhat = static_cast<double>(m[i]) / c1;
    const double vhat = static_cast<double>(v[i]) / c2;
    param[i] = static_cast<T>(static_cast<double>(param[i]) - lr * mhat / (std::sqrt(vhat) + epsilon));
  }
}

/// Applies one Adam step to every trainable parameter that received a
/// gradient. Moments are created on first use.
template <class T>
void adam_step(ParameterStore<T>& params, AdamState<T>& state, double lr) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.dims());
      state.v.emplace_back(p.value.dims());
    }
  }
  if (state.m.size() != params.size()) throw DimError("adam_step: state does not match parameters");
  ++state.step;
  std::size_t i = 0;
  for (auto& p : params) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    ++i;
    if (m.dims() != p.value.dims()) throw DimError("adam_step: moment dims differ for " + p.name);
    if (!p.trainable || p.grad.empty()) continue;
    if (p.grad.dims() != p.value.dims()) throw DimError("adam_step: gradient dims differ for " + p.name);
    adam_update<T>(p.value.span(), p.grad.span(), m.span(), v.span(), state.step, state.beta1,
                   state.beta2, state.epsilon, lr);
  }
}

}  // namespace hictl::num
