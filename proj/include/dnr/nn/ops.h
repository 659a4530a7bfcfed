// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_OPS_H_
#define DNR_NN_OPS_H_

#include <span>
#include <vector>

#include "dnr/nn/autograd.h"

namespace dnr::nn {

// Elementwise; operands of add/sub/mul must have identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
// a * s for a one-element s.
Var mul_scalar(const Var& a, const Var& s);
// Broadcast a vector with last-dimension length over all leading dims.
Var add_bias(const Var& x, const Var& bias);
Var mul_row(const Var& x, const Var& row);

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var softplus(const Var& x);
Var exp(const Var& x);
Var square(const Var& x);

// Reductions to shape {1}.
Var sum(const Var& x);
Var mean(const Var& x);
// sqrt(sum x^2 + eps); eps keeps the gradient defined at zero.
Var l2_norm(const Var& x, double eps = 1e-12);

Var reshape(const Var& x, Shape shape);
// Rank-2 ops below treat x as (rows x cols).
Var transpose(const Var& x);
Var concat_cols(const std::vector<Var>& xs);
Var slice_cols(const Var& x, std::int64_t start, std::int64_t len);
Var reverse_rows(const Var& x);
// Temporal average pooling: [N, C] -> [1, C].
Var mean_rows(const Var& x);
// [1, C] -> [n, C].
Var repeat_rows(const Var& x, std::int64_t n);

Var matmul(const Var& a, const Var& b);
Var softmax_rows(const Var& x);

// 1-D convolution along the length axis with zero "same" padding.
// x: [L, Cin] or [B, L, Cin]; w: [k, Cin, Cout] with odd k.
Var conv1d(const Var& x, const Var& w);
// [k, Cin, Cout] -> [k, Cout, Cin] with taps reversed. conv1d(g, flip_taps(w))
// is the adjoint of conv1d(., w) applied to g.
Var flip_taps(const Var& w);

struct Conv2dGeometry {
  int stride_t = 1;
  int stride_f = 1;
  int pad_t = 0;
  int pad_f = 0;
};

std::int64_t conv_output_size(std::int64_t in, std::int64_t filter,
                              std::int64_t stride, std::int64_t pad);

// x: [Cin, T, F]; w: [Cout, Cin, KT, KF]; bias: [Cout] or undefined.
Var conv2d(const Var& x, const Var& w, const Var& bias, Conv2dGeometry g);

// Gate blocks are ordered (reset, update, candidate) along the 3H axis.
struct GruWeights {
  Var w_ih;  // [In, 3H]
  Var w_hh;  // [H, 3H]
  Var b_ih;  // [3H]
  Var b_hh;  // [3H]
};

// One step of the GRU recurrence on plain values:
//   r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h
std::vector<double> gru_cell(std::span<const double> x,
                             std::span<const double> h, const Tensor& w_ih,
                             const Tensor& w_hh, const Tensor& b_ih,
                             const Tensor& b_hh);

// Runs the recurrence over the rows of x ([N, In]) from a zero state;
// returns all hidden states [N, H].
Var gru(const Var& x, const GruWeights& w);

}  // namespace dnr::nn

#endif  // DNR_NN_OPS_H_
