#pragma once

// Dense kernels on raw row-major buffers. Two implementations share the same
// per-row inner loops (detail/kernel_rows.hpp): `serial` is the reference,
// `parallel` distributes independent output rows over OpenMP threads. No
// reduction is ever split across threads, so both are bit-identical.

#include <cstddef>

namespace hictl::num::kernels {

/// Below this many multiply-adds the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 15;

namespace serial {

// C[m,n] (+)= A[m,k] * B[k,n]
template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);
// C[m,n] (+)= A[m,k] * B[n,k]^T
template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);
// C[m,n] (+)= A[k,m]^T * B[k,n]
template <class T>
void matmul_tn(const T* a, const T* b, T* c, int k, int m, int n, bool accumulate);

template <class T>
void gelu(const T* x, T* y, std::size_t n);
// dx += dy * gelu'(x)
template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n);

// In-place max-subtracted softmax of every row of x[m,n].
template <class T>
void softmax_rows(T* x, int m, int n);

// y = gamma * (x - mean) * rstd + beta per row; mean and rstd are saved.
template <class T>
void layer_norm(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* rstd, int m, int n,
                T eps);
// Accumulates into dx, dgamma and dbeta; dgamma/dbeta may be null.
template <class T>
void layer_norm_backward(const T* x, const T* gamma, const T* mean, const T* rstd, const T* dy,
                         T* dx, T* dgamma, T* dbeta, int m, int n);

}  // namespace serial

namespace parallel {

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);
template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);
template <class T>
void matmul_tn(const T* a, const T* b, T* c, int k, int m, int n, bool accumulate);
template <class T>
void gelu(const T* x, T* y, std::size_t n);
template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n);
template <class T>
void softmax_rows(T* x, int m, int n);
template <class T>
void layer_norm(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* rstd, int m, int n,
                T eps);
template <class T>
void layer_norm_backward(const T* x, const T* gamma, const T* mean, const T* rstd, const T* dy,
                         T* dx, T* dgamma, T* dbeta, int m, int n);

}  // namespace parallel

}  // namespace hictl::num::kernels
