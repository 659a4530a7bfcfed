// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_AUTOGRAD_H_
#define DNR_NN_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dnr/nn/tensor.h"

namespace dnr::nn {

class Var;

namespace detail {

// Receives the gradient of the node's output and the output value itself.
using BackwardFn = std::function<void(const Tensor& grad, const Tensor& value)>;

struct Node {
  Tensor value;
  Tensor grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<Var> inputs;
  BackwardFn backward;
  std::string name;
};

}  // namespace detail

// Handle to a node of the dynamically recorded computation graph. Copies
// share the node. Leaves created with requires_grad accumulate gradients
// across backward passes until zero_grad().
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false, std::string name = "");

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::size_t i) const { return node_->value.dim(i); }
  double item() const { return node_->value.item(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad; }
  // Zeros of the value's shape when no gradient has been accumulated.
  Tensor grad() const;
  void zero_grad();
  const std::string& name() const { return node_->name; }

  detail::Node* node() const { return node_.get(); }

 private:
  friend Var make_result(Tensor, std::vector<Var>, std::string_view,
                         detail::BackwardFn);
  std::shared_ptr<detail::Node> node_;
};

// Records an op result. Fails fast with the scoped op name when the value is
// not finite. When gradients are disabled or no input needs one, the
// backward closure is dropped.
Var make_result(Tensor value, std::vector<Var> inputs, std::string_view op,
                detail::BackwardFn backward);

// Adds g into v's gradient if v requires one.
void accumulate_grad(const Var& v, const Tensor& g);
void accumulate_grad(const Var& v, Tensor&& g);

// Reverse pass from a one-element root (seed 1) or with an explicit seed.
void backward(const Var& root);
void backward(const Var& root, const Tensor& seed);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Prefix for op names recorded while alive, e.g. "post/conv1".
class NameScope {
 public:
  explicit NameScope(std::string_view name);
  ~NameScope();
  NameScope(const NameScope&) = delete;
  NameScope& operator=(const NameScope&) = delete;
};

std::string current_scope();

}  // namespace dnr::nn

#endif  // DNR_NN_AUTOGRAD_H_
