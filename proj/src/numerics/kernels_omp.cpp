#include "hictl/numerics/detail/kernel_rows.hpp"
#include "hictl/numerics/kernels.hpp"

namespace hictl::num::kernels::parallel {

namespace {

bool worth_it(std::size_t work) { return work >= kParallelThreshold; }

}  // namespace

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  const bool par = worth_it(static_cast<std::size_t>(m) * k * n);
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    detail::matmul_row(a + static_cast<std::size_t>(i) * k, b, c + static_cast<std::size_t>(i) * n,
                       k, n, accumulate);
  }
}

template <class T>
void matmul_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  const bool par = worth_it(static_cast<std::size_t>(m) * k * n);
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    detail::matmul_nt_row(a + static_cast<std::size_t>(i) * k, b,
                          c + static_cast<std::size_t>(i) * n, k, n, accumulate);
  }
}

template <class T>
void matmul_tn(const T* a, const T* b, T* c, int k, int m, int n, bool accumulate) {
  const bool par = worth_it(static_cast<std::size_t>(m) * k * n);
#pragma omp parallel for schedule(static) if (par)
  for (int r = 0; r < m; ++r) {
    detail::matmul_tn_row(a, b, c + static_cast<std::size_t>(r) * n, r, k, m, n, accumulate);
  }
}

template <class T>
void gelu(const T* x, T* y, std::size_t n) {
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (worth_it(n * 16))
  for (std::ptrdiff_t i = 0; i < len; ++i) y[i] = detail::gelu_scalar(x[i]);
}

template <class T>
void gelu_backward(const T* x, const T* dy, T* dx, std::size_t n) {
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (worth_it(n * 16))
  for (std::ptrdiff_t i = 0; i < len; ++i) dx[i] += dy[i] * detail::gelu_grad_scalar(x[i]);
}

template <class T>
void softmax_rows(T* x, int m, int n) {
#pragma omp parallel for schedule(static) if (worth_it(static_cast<std::size_t>(m) * n * 8))
  for (int i = 0; i < m; ++i) detail::softmax_row(x + static_cast<std::size_t>(i) * n, n);
}

template <class T>
void layer_norm(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* rstd, int m, int n,
                T eps) {
#pragma omp parallel for schedule(static) if (worth_it(static_cast<std::size_t>(m) * n * 8))
  for (int i = 0; i < m; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * n;
    detail::layer_norm_row(x + off, gamma, beta, y + off, mean[i], rstd[i], n, eps);
  }
}

template <class T>
void layer_norm_backward(const T* x, const T* gamma, const T* mean, const T* rstd, const T* dy,
                         T* dx, T* dgamma, T* dbeta, int m, int n) {
  const bool par = worth_it(static_cast<std::size_t>(m) * n * 8);
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * n;
      detail::layer_norm_backward_row(x + off, gamma, mean[i], rstd[i], dy + off, dx + off, n);
    }
    if (dgamma || dbeta) {
#pragma omp for schedule(static)
      for (int j = 0; j < n; ++j) {
        detail::layer_norm_param_grad_col(x, mean, rstd, dy, dgamma, dbeta, j, m, n);
      }
    }
  }
}

#define HICTL_INSTANTIATE(T)                                                                   \
  template void matmul<T>(const T*, const T*, T*, int, int, int, bool);                        \
  template void matmul_nt<T>(const T*, const T*, T*, int, int, int, bool);                     \
  template void matmul_tn<T>(const T*, const T*, T*, int, int, int, bool);                     \
  template void gelu<T>(const T*, T*, std::size_t);                                            \
  template void gelu_backward<T>(const T*, const T*, T*, std::size_t);                         \
  template void softmax_rows<T>(T*, int, int);                                                 \
  template void layer_norm<T>(const T*, const T*, const T*, T*, T*, T*, int, int, T);          \
  template void layer_norm_backward<T>(const T*, const T*, const T*, const T*, const T*, T*,   \
                                       T*, T*, int, int);

HICTL_INSTANTIATE(float)
HICTL_INSTANTIATE(double)
#undef HICTL_INSTANTIATE

}  // namespace hictl::num::kernels::parallel
