// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/autograd.h"

#include <unordered_set>

#include "dnr/common/error.h"

namespace dnr::nn {
namespace {

thread_local bool g_grad_enabled = true;
thread_local std::vector<std::string> g_scope;

}  // namespace

Var::Var(Tensor value, bool requires_grad, std::string name)
    : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->name = std::move(name);
}

Tensor Var::grad() const {
  if (node_->has_grad) return node_->grad;
  return Tensor(node_->value.shape(), 0.0);
}

void Var::zero_grad() {
  node_->has_grad = false;
  node_->grad = Tensor();
}

Var make_result(Tensor value, std::vector<Var> inputs, std::string_view op,
                detail::BackwardFn backward) {
  std::string name = current_scope();
  if (!name.empty()) name += ':';
  name += op;
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + name);
  }
  Var out;
  out.node_ = std::make_shared<detail::Node>();
  out.node_->value = std::move(value);
  out.node_->name = std::move(name);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Var& v : inputs) needs = needs || v.requires_grad();
  }
  if (needs) {
    out.node_->requires_grad = true;
    out.node_->inputs = std::move(inputs);
    out.node_->backward = std::move(backward);
  }
  return out;
}

void accumulate_grad(const Var& v, const Tensor& g) {
  detail::Node* n = v.node();
  if (!n->requires_grad) return;
  if (g.shape() != n->value.shape()) {
    throw ShapeError("gradient shape " + shape_str(g.shape()) +
                     " does not match value " + shape_str(n->value.shape()) +
                     " in " + n->name);
  }
  if (n->has_grad) {
    n->grad += g;
  } else {
    n->grad = g;
    n->has_grad = true;
  }
}

void accumulate_grad(const Var& v, Tensor&& g) {
  detail::Node* n = v.node();
  if (!n->requires_grad) return;
  if (n->has_grad) {
    accumulate_grad(v, static_cast<const Tensor&>(g));
    return;
  }
  if (g.shape() != n->value.shape()) {
    throw ShapeError("gradient shape " + shape_str(g.shape()) +
                     " does not match value " + shape_str(n->value.shape()) +
                     " in " + n->name);
  }
  n->grad = std::move(g);
  n->has_grad = true;
}

void backward(const Var& root) {
  if (root.value().size() != 1) {
    throw ShapeError("backward() without a seed needs a one-element root, got " +
                     shape_str(root.shape()));
  }
  backward(root, Tensor(root.shape(), 1.0));
}

void backward(const Var& root, const Tensor& seed) {
  if (!root.requires_grad()) return;
  // Iterative post-order DFS gives a topological order of interior nodes.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].node();
      if (child->requires_grad && child->backward && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  accumulate_grad(root, seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->has_grad || !node->backward) continue;
    if (!node->grad.all_finite()) {
      throw NumericError("non-finite gradient reaching " + node->name);
    }
    node->backward(node->grad, node->value);
    // Interior gradients are consumed once; leaves keep theirs.
    node->grad = Tensor();
    node->has_grad = false;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

NameScope::NameScope(std::string_view name) { g_scope.emplace_back(name); }
NameScope::~NameScope() { g_scope.pop_back(); }

std::string current_scope() {
  std::string s;
  for (const auto& part : g_scope) {
    if (!s.empty()) s += '/';
    s += part;
  }
  return s;
}

}  // namespace dnr::nn
