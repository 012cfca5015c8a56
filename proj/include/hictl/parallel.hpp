#pragma once

#include <cstddef>
#include <exception>

namespace hictl {

/// Runs fn(i) for i in [0, n) on the OpenMP thread pool and rethrows the
/// first exception raised by any iteration.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(hictl_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace hictl
