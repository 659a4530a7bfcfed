// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "dnr/common/random.h"
#include "dnr/nn/layers.h"

namespace dnr::nn {

GradCheckResult check_gradients(const std::function<Var()>& f,
                                const std::vector<Var>& inputs, double step,
                                double floor) {
  for (Var v : inputs) v.zero_grad();
  backward(f());
  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Var x = inputs[i];
    const Tensor analytic = x.grad();
    Tensor& val = x.mutable_value();
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t j = 0; j < val.size(); ++j) {
      const double orig = val[j];
      val[j] = orig + step;
      const double fp = f().item();
      val[j] = orig - step;
      const double fm = f().item();
      val[j] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      diff += (analytic[j] - numeric) * (analytic[j] - numeric);
      na += analytic[j] * analytic[j];
      nn += numeric * numeric;
    }
    const double rel =
        std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
    if (i == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_input = x.name().empty() ? "input " + std::to_string(i) : x.name();
    }
  }
  for (Var v : inputs) v.zero_grad();
  return result;
}

}  // namespace dnr::nn

namespace dnr::nn {
namespace {

Var random_var(Shape shape, Rng& rng, const std::string& name,
               double offset = 0.0) {
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = offset + rng.normal();
  return Var(std::move(t), true, name);
}

// Contracts an arbitrary output with fixed random weights so every output
// element receives a distinct upstream gradient.
Var project(const Var& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w(y.shape());
  for (double& v : w.vec()) v = rng.normal();
  return sum(mul(y, Var(std::move(w))));
}

}  // namespace

std::vector<NamedGradCheck> primitive_gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NamedGradCheck> out;
  const std::uint64_t ps = derive_seed(seed, 99);
  auto run = [&](const std::string& name, std::function<Var()> f,
                 std::vector<Var> inputs) {
    out.push_back({name, check_gradients([&] { return project(f(), ps); }, inputs)});
  };

  Var a = random_var({3, 4}, rng, "a");
  Var b = random_var({3, 4}, rng, "b");
  Var row = random_var({4}, rng, "row");
  Var s = random_var({1}, rng, "s");
  run("add", [&] { return add(a, b); }, {a, b});
  run("sub", [&] { return sub(a, b); }, {a, b});
  run("mul", [&] { return mul(a, b); }, {a, b});
  run("scale", [&] { return scale(a, -1.7); }, {a});
  run("add_scalar", [&] { return add_scalar(a, 0.3); }, {a});
  run("mul_scalar", [&] { return mul_scalar(a, s); }, {a, s});
  run("add_bias", [&] { return add_bias(a, row); }, {a, row});
  run("mul_row", [&] { return mul_row(a, row); }, {a, row});
  run("relu", [&] { return relu(a); }, {a});
  run("leaky_relu", [&] { return leaky_relu(a, 0.2); }, {a});
  run("sigmoid", [&] { return sigmoid(a); }, {a});
  run("tanh", [&] { return tanh(a); }, {a});
  run("softplus", [&] { return softplus(a); }, {a});
  run("exp", [&] { return exp(a); }, {a});
  run("square", [&] { return square(a); }, {a});
  run("sum", [&] { return sum(a); }, {a});
  run("mean", [&] { return mean(a); }, {a});
  run("l2_norm", [&] { return l2_norm(a); }, {a});
  run("reshape", [&] { return reshape(a, {2, 6}); }, {a});
  run("transpose", [&] { return transpose(a); }, {a});
  Var c = random_var({3, 2}, rng, "c");
  run("concat_cols", [&] { return concat_cols({a, c, b}); }, {a, b, c});
  run("slice_cols", [&] { return slice_cols(a, 1, 2); }, {a});
  run("reverse_rows", [&] { return reverse_rows(a); }, {a});
  run("mean_rows", [&] { return mean_rows(a); }, {a});
  Var r1 = random_var({1, 4}, rng, "r1");
  run("repeat_rows", [&] { return repeat_rows(r1, 3); }, {r1});
  Var m = random_var({4, 5}, rng, "m");
  run("matmul", [&] { return matmul(a, m); }, {a, m});
  run("softmax_rows", [&] { return softmax_rows(a); }, {a});

  Var x1 = random_var({7, 3}, rng, "x");
  Var w1 = random_var({5, 3, 2}, rng, "w");
  run("conv1d", [&] { return conv1d(x1, w1); }, {x1, w1});
  Var xb = random_var({2, 6, 3}, rng, "xb");
  run("conv1d_batched", [&] { return conv1d(xb, w1); }, {xb, w1});
  run("flip_taps", [&] { return flip_taps(w1); }, {w1});
  Var x2 = random_var({2, 4, 9}, rng, "x2");
  Var w2 = random_var({3, 2, 3, 3}, rng, "w2");
  Var b2 = random_var({3}, rng, "b2");
  run("conv2d", [&] { return conv2d(x2, w2, b2, {1, 2, 1, 1}); }, {x2, w2, b2});

  ParamStore store;
  Rng init(derive_seed(seed, 7));
  Var xs = random_var({5, 3}, rng, "xs");
  Gru g(store, "gru", 3, 4, init);
  for (Var v : {g.weights.b_ih, g.weights.b_hh}) {
    for (double& t : v.mutable_value().vec()) t = 0.3 * rng.normal();
  }
  run("gru", [&] { return g(xs); },
      {xs, g.weights.w_ih, g.weights.w_hh, g.weights.b_ih, g.weights.b_hh});
  BiGru bg(store, "bigru", 3, 2, init);
  run("bigru", [&] { return bg(xs); },
      {xs, bg.forward.weights.w_hh, bg.backward.weights.w_ih});
  Dense d(store, "dense", 3, 2, init);
  for (double& t : d.bias.mutable_value().vec()) t = rng.normal();
  run("dense", [&] { return d(xs); }, {xs, d.weight, d.bias});
  Conv1d cv(store, "conv", 3, 2, 3, init);
  run("conv1d_layer", [&] { return cv(xs); }, {xs, cv.weight, cv.bias});
  TemplateAttention att(store, "att", 3, 5, 4, 2, init);
  Var q = random_var({1, 3}, rng, "q");
  run("template_attention", [&] { return att(q); },
      {q, att.templates, att.query_proj.weight, att.key_proj.weight,
       att.value_proj.weight, att.out_proj.weight});
  Var xd = random_var({2, 4, 9}, rng, "xd");
  run("conv2d_unbiased", [&] { return conv2d(xd, w2, Var(), {2, 1, 0, 1}); },
      {xd, w2});
  return out;
}

}  // namespace dnr::nn
