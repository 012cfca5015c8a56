#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hictl/numerics/rng.hpp"
#include "hictl/numerics/tensor.hpp"

namespace hictl::num {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // empty until a backward pass touches it
  bool trainable = true;
};

/// Owns a model's parameters in registration order. Order is part of the
/// checkpoint format, so it must not depend on anything but the config.
template <class T>
class ParameterStore {
 public:
  using Id = int;

  Id add(std::string name, Tensor<T> value) {
    if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    params_.push_back(Parameter<T>{std::move(name), std::move(value), {}, true});
    return static_cast<Id>(params_.size() - 1);
  }

  Id add_normal(std::string name, Shape dims, double stddev, Rng& rng) {
    Tensor<T> t(std::move(dims));
    for (auto& v : t.values()) v = static_cast<T>(rng.normal() * stddev);
    return add(std::move(name), std::move(t));
  }

  Parameter<T>& operator[](Id id) { return params_.at(static_cast<std::size_t>(id)); }
  const Parameter<T>& operator[](Id id) const { return params_.at(static_cast<std::size_t>(id)); }

  std::optional<Id> find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return static_cast<Id>(i);
    }
    return std::nullopt;
  }

  std::size_t size() const { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad = Tensor<T>();
  }

  void set_trainable(bool trainable) {
    for (auto& p : params_) p.trainable = trainable;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  template <class U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& p : params_) {
      out[out.add(p.name, p.value.template cast<U>())].trainable = p.trainable;
    }
    return out;
  }

 private:
  std::vector<Parameter<T>> params_;
};

}  // namespace hictl::num
