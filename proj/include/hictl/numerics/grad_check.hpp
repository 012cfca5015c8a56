#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hictl/numerics/rng.hpp"
#include "hictl/numerics/tape.hpp"

namespace hictl::num {

struct GradCheckOptions {
  double h = 1e-3;
  /// 0 checks every coordinate; otherwise a seeded random subset per tensor.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Denominator floor so that near-zero gradients are compared absolutely.
  double denominator_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares tape gradients of `loss_fn` with central finite differences for
/// every trainable parameter in `stores`. loss_fn must build a scalar loss on
/// the tape it is given and must be a deterministic function of the
/// parameter values.
template <class T>
GradCheckResult grad_check(const std::vector<ParameterStore<T>*>& stores,
                           const std::function<Var(Tape<T>&)>& loss_fn,
                           const GradCheckOptions& opts = {}) {
  for (auto* s : stores) s->zero_grad();
  {
    Tape<T> tape;
    tape.backward(loss_fn(tape));
  }
  auto eval = [&] {
    Tape<T> tape(false);
    return static_cast<double>(tape.value(loss_fn(tape)).item());
  };

  GradCheckResult res;
  Rng rng(opts.seed);
  for (auto* s : stores) {
    for (auto& p : *s) {
      if (!p.trainable) continue;
      const std::size_t n = p.value.size();
      std::vector<std::size_t> coords(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
      if (opts.max_coords_per_param > 0 && n > opts.max_coords_per_param) {
        for (std::size_t i = 0; i < opts.max_coords_per_param; ++i) {
          std::swap(coords[i], coords[i + rng.below(n - i)]);
        }
        coords.resize(opts.max_coords_per_param);
      }
      for (std::size_t idx : coords) {
        const T orig = p.value[idx];
        p.value[idx] = static_cast<T>(orig + opts.h);
        const double up = eval();
        p.value[idx] = static_cast<T>(orig - opts.h);
        const double down = eval();
        p.value[idx] = orig;
        const double numeric = (up - down) / (2.0 * opts.h);
        const double analytic = p.grad.empty() ? 0.0 : static_cast<double>(p.grad[idx]);
        const double err = relative_error(analytic, numeric, opts.denominator_floor);
        ++res.coords_checked;
        if (err > res.max_rel_error) {
          res.max_rel_error = err;
          res.worst_param = p.name;
          res.worst_index = idx;
          res.worst_analytic = analytic;
          res.worst_numeric = numeric;
        }
      }
    }
  }
  return res;
}

}  // namespace hictl::num
