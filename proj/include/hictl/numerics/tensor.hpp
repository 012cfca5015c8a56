#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hictl/error.hpp"

namespace hictl::num {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

inline std::string shape_string(const Shape& dims) {
  std::string out = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out + ")";
}

/// Dense row-major tensor. Rank 0 is a scalar holding one value.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape dims, T fill = T(0)) : dims_(std::move(dims)) {
    check_dims();
    data_.assign(shape_size(dims_), fill);
  }

  Tensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_size(dims_)) {
      throw DimError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + shape_string(dims_));
    }
  }

  static Tensor vector(std::initializer_list<T> values) {
    return Tensor({static_cast<int>(values.size())}, std::vector<T>(values));
  }

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  const Shape& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Leading dimension; a vector counts as a single row.
  int rows() const { return rank() <= 1 ? 1 : dims_[0]; }
  /// Trailing dimension; a scalar has one column.
  int cols() const { return rank() == 0 ? 1 : dims_.back(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  std::span<T> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())};
  }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols(), static_cast<std::size_t>(cols())};
  }

  T item() const {
    if (data_.size() != 1) throw DimError("item() on tensor with " + std::to_string(size()) + " values");
    return data_[0];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  template <class U>
  Tensor<U> cast() const {
    return Tensor<U>(dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  void check_dims() const {
    for (int d : dims_) {
      if (d < 0) throw DimError("negative dimension in " + shape_string(dims_));
    }
  }

  Shape dims_;
  std::vector<T> data_;
};

inline void require_same_dims(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw DimError(std::string(what) + ": dims " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace hictl::num
