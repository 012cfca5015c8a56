#pragma once

#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "hictl/numerics/params.hpp"
#include "hictl/numerics/tensor.hpp"

namespace hictl::num {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode gradient tape. Operations (ops.hpp) push nodes in evaluation
/// order; backward() walks them in reverse and accumulates parameter
/// gradients into Parameter::grad. A tape lives for one step.
template <class T>
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  /// With record == false only values are computed (no closures, no grads).
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false, {}});
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  /// Leaf for a parameter. Frozen parameters behave like constants.
  Var param(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
    nodes_.push_back(Node{{}, {}, &p, record_ && p.trainable, {}});
    const int id = static_cast<int>(nodes_.size() - 1);
    param_nodes_.emplace(&p, id);
    return Var{id};
  }

  const Tensor<T>& value(Var v) const {
    const Node& n = node(v);
    return n.param ? n.param->value : n.value;
  }

  /// Gradient received by v during backward(); empty if none reached it.
  const Tensor<T>& grad(Var v) const {
    const Node& n = node(v);
    return n.param ? n.param->grad : n.grad;
  }

  bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// Records the result of an operation. The closure runs during backward()
  /// only if the result received a gradient.
  Var push(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    if (record_) {
      for (Var in : inputs) needs = needs || node(in).requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs, needs ? std::move(backward) : Backward{}});
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  /// Gradient buffer of v, zero-initialised on first use.
  Tensor<T>& grad_acc(Var v) {
    Node& n = node(v);
    Tensor<T>& g = n.param ? n.param->grad : n.grad;
    const Tensor<T>& val = n.param ? n.param->value : n.value;
    if (g.dims() != val.dims() || g.size() != val.size()) g = Tensor<T>(val.dims());
    return g;
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw DimError("backward() needs a scalar loss");
    if (!record_ || !node(loss).requires_grad) return;
    grad_acc(loss)[0] += T(1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param;
    bool requires_grad;
    Backward backward;
  };

  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_nodes_;
};

}  // namespace hictl::num
