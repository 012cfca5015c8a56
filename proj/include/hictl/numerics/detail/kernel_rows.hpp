#pragma once

// Per-row building blocks shared by the serial and OpenMP kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace hictl::num::kernels::detail {

template <class T>
inline T dot(const T* a, const T* b, int n) {
  T acc = T(0);
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// c_row[n] (+)= a_row[k] * B[k,n]
template <class T>
inline void matmul_row(const T* a_row, const T* b, T* c_row, int k, int n, bool accumulate) {
  if (!accumulate) std::fill(c_row, c_row + n, T(0));
  for (int p = 0; p < k; ++p) {
    const T av = a_row[p];
    const T* b_row = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
    for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

// c_row[n] (+)= a_row[k] * B[n,k]^T
template <class T>
inline void matmul_nt_row(const T* a_row, const T* b, T* c_row, int k, int n, bool accumulate) {
  for (int j = 0; j < n; ++j) {
    const T v = dot(a_row, b + static_cast<std::size_t>(j) * k, k);
    c_row[j] = accumulate ? c_row[j] + v : v;
  }
}

// Row r of A[k,m]^T * B[k,n].
template <class T>
inline void matmul_tn_row(const T* a, const T* b, T* c_row, int r, int k, int m, int n,
                          bool accumulate) {
  if (!accumulate) std::fill(c_row, c_row + n, T(0));
  for (int p = 0; p < k; ++p) {
    const T av = a[static_cast<std::size_t>(p) * m + r];
    const T* b_row = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
    for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

template <class T>
inline constexpr T kGeluScale = T(0.7978845608028654);  // sqrt(2 / pi)
template <class T>
inline constexpr T kGeluCubic = T(0.044715);

template <class T>
inline T gelu_scalar(T x) {
  const T inner = kGeluScale<T> * (x + kGeluCubic<T> * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <class T>
inline T gelu_grad_scalar(T x) {
  const T inner = kGeluScale<T> * (x + kGeluCubic<T> * x * x * x);
  const T t = std::tanh(inner);
  const T dinner = kGeluScale<T> * (T(1) + T(3) * kGeluCubic<T> * x * x);
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * dinner;
}

template <class T>
inline void softmax_row(T* x, int n) {
  if (n == 0) return;
  const T mx = *std::max_element(x, x + n);
  T sum = T(0);
  for (int j = 0; j < n; ++j) {
    x[j] = std::exp(x[j] - mx);
    sum += x[j];
  }
  const T inv = T(1) / sum;
  for (int j = 0; j < n; ++j) x[j] *= inv;
}

template <class T>
inline void layer_norm_row(const T* x, const T* gamma, const T* beta, T* y, T& mean, T& rstd,
                           int n, T eps) {
  T mu = T(0);
  for (int j = 0; j < n; ++j) mu += x[j];
  mu /= T(n);
  T var = T(0);
  for (int j = 0; j < n; ++j) {
    const T d = x[j] - mu;
    var += d * d;
  }
  var /= T(n);
  const T rs = T(1) / std::sqrt(var + eps);
  for (int j = 0; j < n; ++j) y[j] = gamma[j] * (x[j] - mu) * rs + beta[j];
  mean = mu;
  rstd = rs;
}

// Input gradient of one row; dgamma/dbeta are handled column-wise by callers.
template <class T>
inline void layer_norm_backward_row(const T* x, const T* gamma, T mean, T rstd, const T* dy,
                                    T* dx, int n) {
  T sum_g = T(0);
  T sum_gx = T(0);
  for (int j = 0; j < n; ++j) {
    const T g = dy[j] * gamma[j];
    const T xhat = (x[j] - mean) * rstd;
    sum_g += g;
    sum_gx += g * xhat;
  }
  const T inv_n = T(1) / T(n);
  for (int j = 0; j < n; ++j) {
    const T g = dy[j] * gamma[j];
    const T xhat = (x[j] - mean) * rstd;
    dx[j] += rstd * (g - inv_n * sum_g - xhat * inv_n * sum_gx);
  }
}

// Column j of dgamma/dbeta, summed over rows in order.
template <class T>
inline void layer_norm_param_grad_col(const T* x, const T* mean, const T* rstd, const T* dy,
                                      T* dgamma, T* dbeta, int j, int m, int n) {
  T dg = T(0);
  T db = T(0);
  for (int i = 0; i < m; ++i) {
    const std::size_t idx = static_cast<std::size_t>(i) * n + j;
    dg += dy[idx] * (x[idx] - mean[i]) * rstd[i];
    db += dy[idx];
  }
  if (dgamma) dgamma[j] += dg;
  if (dbeta) dbeta[j] += db;
}

}  // namespace hictl::num::kernels::detail
