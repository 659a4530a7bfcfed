// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/layers.h"

#include <cmath>

#include "dnr/common/error.h"

namespace dnr::nn {

Tensor glorot_uniform(Shape shape, std::int64_t fan_in, std::int64_t fan_out,
                      Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = rng.uniform(-a, a);
  return t;
}

Dense::Dense(ParamStore& store, const std::string& name, std::int64_t in,
             std::int64_t out, Rng& rng, Init init) {
  weight = store.add(name + "/w", init == Init::kZero
                                      ? Tensor({in, out})
                                      : glorot_uniform({in, out}, in, out, rng));
  bias = store.add(name + "/b", Tensor({out}));
}

Var Dense::operator()(const Var& x) const {
  return add_bias(matmul(x, weight), bias);
}

Conv1d::Conv1d(ParamStore& store, const std::string& name, std::int64_t cin,
               std::int64_t cout, std::int64_t taps, Rng& rng, Init init) {
  weight = store.add(name + "/w",
                     init == Init::kZero
                         ? Tensor({taps, cin, cout})
                         : glorot_uniform({taps, cin, cout}, taps * cin,
                                          taps * cout, rng));
  bias = store.add(name + "/b", Tensor({cout}));
}

Var Conv1d::operator()(const Var& x) const {
  return add_bias(conv1d(x, weight), bias);
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, std::int64_t cin,
               std::int64_t cout, std::int64_t kt, std::int64_t kf,
               Conv2dGeometry g, Rng& rng)
    : geometry(g) {
  weight = store.add(name + "/w", glorot_uniform({cout, cin, kt, kf},
                                                 cin * kt * kf, cout * kt * kf, rng));
  bias = store.add(name + "/b", Tensor({cout}));
}

Var Conv2d::operator()(const Var& x) const {
  return conv2d(x, weight, bias, geometry);
}

Gru::Gru(ParamStore& store, const std::string& name, std::int64_t in,
         std::int64_t hidden, Rng& rng) {
  weights.w_ih = store.add(name + "/w_ih",
                           glorot_uniform({in, 3 * hidden}, in, hidden, rng));
  weights.w_hh = store.add(name + "/w_hh",
                           glorot_uniform({hidden, 3 * hidden}, hidden, hidden, rng));
  weights.b_ih = store.add(name + "/b_ih", Tensor({3 * hidden}));
  weights.b_hh = store.add(name + "/b_hh", Tensor({3 * hidden}));
}

BiGru::BiGru(ParamStore& store, const std::string& name, std::int64_t in,
             std::int64_t hidden, Rng& rng)
    : forward(store, name + "/fwd", in, hidden, rng),
      backward(store, name + "/bwd", in, hidden, rng) {}

Var BiGru::operator()(const Var& x) const {
  Var f = forward(x);
  Var b = reverse_rows(backward(reverse_rows(x)));
  return concat_cols({f, b});
}

AttentionResult multi_head_attention(const Var& q, const Var& k, const Var& v,
                                     int heads) {
  const std::int64_t d = q.dim(1);
  if (heads <= 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  if (q.dim(0) != 1 || k.dim(1) != d || v.dim(1) != d || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: q " + shape_str(q.shape()) + ", k " +
                     shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  const std::int64_t dh = d / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  Tensor weights({heads, k.dim(0)});
  for (int h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dh, dh);
    Var kh = slice_cols(k, h * dh, dh);
    Var vh = slice_cols(v, h * dh, dh);
    Var a = softmax_rows(scale(matmul(qh, transpose(kh)), inv));
    weights.matrix().row(h) = a.value().matrix().row(0);
    outs.push_back(matmul(a, vh));
  }
  return {concat_cols(outs), std::move(weights)};
}

TemplateAttention::TemplateAttention(ParamStore& store, const std::string& name,
                                     std::int64_t query_dim,
                                     std::int64_t num_templates, std::int64_t dim,
                                     int num_heads, Rng& rng)
    : heads(num_heads) {
  if (num_heads <= 0 || dim % num_heads != 0) {
    throw ShapeError("attention: width " + std::to_string(dim) +
                     " not divisible by " + std::to_string(num_heads) + " heads");
  }
  Tensor t({num_templates, dim});
  for (double& v : t.vec()) v = 0.5 * rng.normal();
  templates = store.add(name + "/templates", std::move(t));
  query_proj = Dense(store, name + "/query", query_dim, dim, rng);
  key_proj = Dense(store, name + "/key", dim, dim, rng);
  value_proj = Dense(store, name + "/value", dim, dim, rng);
  out_proj = Dense(store, name + "/out", dim, dim, rng);
}

AttentionResult TemplateAttention::attend(const Var& query) const {
  AttentionResult r = multi_head_attention(
      query_proj(query), key_proj(templates), value_proj(templates), heads);
  r.output = out_proj(r.output);
  return r;
}

}  // namespace dnr::nn
