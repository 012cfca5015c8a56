#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "hictl/numerics/rng.hpp"
#include "hictl/numerics/tape.hpp"

namespace hictl::testing {

template <class T>
num::Tensor<T> random_tensor(num::Shape dims, num::Rng& rng, double scale = 1.0) {
  num::Tensor<T> t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<T>(rng.normal() * scale);
  return t;
}

/// sum_i x_i * c_i as a scalar Var; turns any tensor output into a loss.
template <class T>
num::Var weighted_sum(num::Tape<T>& tp, num::Var x, const num::Tensor<T>& c) {
  const auto& xv = tp.value(x);
  T s = T(0);
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * c[i];
  const int out_id = static_cast<int>(tp.size());
  return tp.push(num::Tensor<T>::scalar(s), {x}, [x, c, out_id](num::Tape<T>& t) {
    const T g = t.grad(num::Var{out_id})[0];
    auto& gx = t.grad_acc(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * c[i];
  });
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hictl_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Reference uniform integer in [0, n) on a raw engine: rejection of the
/// top partial block, then modulo.
inline std::uint64_t ref_below(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = g();
  } while (r >= limit);
  return r % n;
}

inline double ref_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) / 9007199254740992.0; }

}  // namespace hictl::testing
