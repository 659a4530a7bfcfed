// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/ops.h"

#include <algorithm>
#include <cmath>

#include "dnr/common/error.h"

namespace dnr::nn {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()) +
                     " in " + current_scope());
  }
}

void require_rank(const Var& x, std::size_t rank, const char* op) {
  if (x.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " + shape_str(x.shape()) +
                     " in " + current_scope());
  }
}

std::int64_t last_dim(const Var& x) {
  return x.shape().empty() ? 1 : x.shape().back();
}

// Elementwise unary op with derivative expressed through input and output.
template <typename F, typename D>
Var unary(const Var& x, const char* name, F f, D df) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(std::move(out), {x}, name,
                     [x, df](const Tensor& g, const Tensor& y) {
                       Tensor dx(g.shape());
                       const Tensor& in = x.value();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         dx[i] = g[i] * df(in[i], y[i]);
                       }
                       accumulate_grad(x, std::move(dx));
                     });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return make_result(std::move(out), {a, b}, "add",
                     [a, b](const Tensor& g, const Tensor&) {
                       accumulate_grad(a, g);
                       accumulate_grad(b, g);
                     });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, "sub",
                     [a, b](const Tensor& g, const Tensor&) {
                       accumulate_grad(a, g);
                       Tensor neg = g;
                       for (double& v : neg.vec()) v = -v;
                       accumulate_grad(b, std::move(neg));
                     });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, "mul",
                     [a, b](const Tensor& g, const Tensor&) {
                       Tensor da(g.shape()), db(g.shape());
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         da[i] = g[i] * b.value()[i];
                         db[i] = g[i] * a.value()[i];
                       }
                       accumulate_grad(a, std::move(da));
                       accumulate_grad(b, std::move(db));
                     });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.vec()) v *= s;
  return make_result(std::move(out), {a}, "scale",
                     [a, s](const Tensor& g, const Tensor&) {
                       Tensor da = g;
                       for (double& v : da.vec()) v *= s;
                       accumulate_grad(a, std::move(da));
                     });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.vec()) v += s;
  return make_result(std::move(out), {a}, "add_scalar",
                     [a](const Tensor& g, const Tensor&) { accumulate_grad(a, g); });
}

Var mul_scalar(const Var& a, const Var& s) {
  if (s.value().size() != 1) {
    throw ShapeError("mul_scalar: scalar operand has shape " +
                     shape_str(s.shape()));
  }
  const double sv = s.value()[0];
  Tensor out = a.value();
  for (double& v : out.vec()) v *= sv;
  return make_result(std::move(out), {a, s}, "mul_scalar",
                     [a, s](const Tensor& g, const Tensor&) {
                       const double sv = s.value()[0];
                       Tensor da = g;
                       double ds = 0.0;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         da[i] *= sv;
                         ds += g[i] * a.value()[i];
                       }
                       accumulate_grad(a, std::move(da));
                       accumulate_grad(s, Tensor(s.shape(), ds));
                     });
}

Var add_bias(const Var& x, const Var& bias) {
  const std::int64_t c = last_dim(x);
  if (static_cast<std::int64_t>(bias.value().size()) != c) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) +
                     " does not match last dim of " + shape_str(x.shape()) +
                     " in " + current_scope());
  }
  Tensor out = x.value();
  out.matrix().rowwise() += ConstMatrixMap(bias.value().data(), 1, c).row(0);
  return make_result(std::move(out), {x, bias}, "add_bias",
                     [x, bias, c](const Tensor& g, const Tensor&) {
                       accumulate_grad(x, g);
                       if (bias.requires_grad()) {
                         Tensor db(bias.shape());
                         MatrixMap(db.data(), 1, c) = g.matrix().colwise().sum();
                         accumulate_grad(bias, std::move(db));
                       }
                     });
}

Var mul_row(const Var& x, const Var& row) {
  const std::int64_t c = last_dim(x);
  if (static_cast<std::int64_t>(row.value().size()) != c) {
    throw ShapeError("mul_row: row " + shape_str(row.shape()) +
                     " does not match last dim of " + shape_str(x.shape()));
  }
  Tensor out = x.value();
  const auto r = ConstMatrixMap(row.value().data(), 1, c);
  out.matrix().array().rowwise() *= r.row(0).array();
  return make_result(std::move(out), {x, row}, "mul_row",
                     [x, row, c](const Tensor& g, const Tensor&) {
                       const auto r = ConstMatrixMap(row.value().data(), 1, c);
                       if (x.requires_grad()) {
                         Tensor dx = g;
                         dx.matrix().array().rowwise() *= r.row(0).array();
                         accumulate_grad(x, std::move(dx));
                       }
                       if (row.requires_grad()) {
                         Tensor dr(row.shape());
                         MatrixMap(dr.data(), 1, c) =
                             g.matrix().cwiseProduct(x.value().matrix()).colwise().sum();
                         accumulate_grad(row, std::move(dr));
                       }
                     });
}

Var relu(const Var& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var softplus(const Var& x) {
  return unary(
      x, "softplus",
      [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var exp(const Var& x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var square(const Var& x) {
  return unary(
      x, "square", [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().vec()) acc += v;
  return make_result(Tensor::scalar(acc), {x}, "sum",
                     [x](const Tensor& g, const Tensor&) {
                       accumulate_grad(x, Tensor(x.shape(), g[0]));
                     });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var l2_norm(const Var& x, double eps) {
  double acc = eps;
  for (double v : x.value().vec()) acc += v * v;
  return make_result(Tensor::scalar(std::sqrt(acc)), {x}, "l2_norm",
                     [x](const Tensor& g, const Tensor& y) {
                       Tensor dx = x.value();
                       const double s = g[0] / y[0];
                       for (double& v : dx.vec()) v *= s;
                       accumulate_grad(x, std::move(dx));
                     });
}

Var reshape(const Var& x, Shape shape) {
  if (numel(shape) != static_cast<std::int64_t>(x.value().size())) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  return make_result(x.value().reshaped(std::move(shape)), {x}, "reshape",
                     [x](const Tensor& g, const Tensor&) {
                       accumulate_grad(x, g.reshaped(x.shape()));
                     });
}

Var transpose(const Var& x) {
  require_rank(x, 2, "transpose");
  const std::int64_t r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  out.matrix() = x.value().matrix().transpose();
  return make_result(std::move(out), {x}, "transpose",
                     [x, r, c](const Tensor& g, const Tensor&) {
                       Tensor dx({r, c});
                       dx.matrix() = g.matrix().transpose();
                       accumulate_grad(x, std::move(dx));
                     });
}

Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: no inputs");
  const std::int64_t rows = xs[0].dim(0);
  std::int64_t cols = 0;
  for (const Var& v : xs) {
    require_rank(v, 2, "concat_cols");
    if (v.dim(0) != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(xs[0].shape()) +
                       " vs " + shape_str(v.shape()) + " in " + current_scope());
    }
    cols += v.dim(1);
  }
  Tensor out({rows, cols});
  std::int64_t off = 0;
  for (const Var& v : xs) {
    out.matrix().middleCols(off, v.dim(1)) = v.value().matrix();
    off += v.dim(1);
  }
  return make_result(std::move(out), xs, "concat_cols",
                     [xs](const Tensor& g, const Tensor&) {
                       std::int64_t off = 0;
                       for (const Var& v : xs) {
                         if (v.requires_grad()) {
                           Tensor d(v.shape());
                           d.matrix() = g.matrix().middleCols(off, v.dim(1));
                           accumulate_grad(v, std::move(d));
                         }
                         off += v.dim(1);
                       }
                     });
}

Var slice_cols(const Var& x, std::int64_t start, std::int64_t len) {
  require_rank(x, 2, "slice_cols");
  if (start < 0 || len < 0 || start + len > x.dim(1)) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for " +
                     shape_str(x.shape()));
  }
  Tensor out({x.dim(0), len});
  out.matrix() = x.value().matrix().middleCols(start, len);
  return make_result(std::move(out), {x}, "slice_cols",
                     [x, start, len](const Tensor& g, const Tensor&) {
                       Tensor dx(x.shape());
                       dx.matrix().middleCols(start, len) = g.matrix();
                       accumulate_grad(x, std::move(dx));
                     });
}

Var reverse_rows(const Var& x) {
  require_rank(x, 2, "reverse_rows");
  Tensor out(x.shape());
  out.matrix() = x.value().matrix().colwise().reverse();
  return make_result(std::move(out), {x}, "reverse_rows",
                     [x](const Tensor& g, const Tensor&) {
                       Tensor dx(x.shape());
                       dx.matrix() = g.matrix().colwise().reverse();
                       accumulate_grad(x, std::move(dx));
                     });
}

Var mean_rows(const Var& x) {
  require_rank(x, 2, "mean_rows");
  const std::int64_t n = x.dim(0), c = x.dim(1);
  if (n == 0) throw ShapeError("mean_rows: no rows");
  Tensor out({1, c});
  out.matrix() = x.value().matrix().colwise().mean();
  return make_result(std::move(out), {x}, "mean_rows",
                     [x, n](const Tensor& g, const Tensor&) {
                       Tensor dx(x.shape());
                       dx.matrix().rowwise() = g.matrix().row(0) / static_cast<double>(n);
                       accumulate_grad(x, std::move(dx));
                     });
}

Var repeat_rows(const Var& x, std::int64_t n) {
  if (x.shape().size() != 2 || x.dim(0) != 1) {
    throw ShapeError("repeat_rows: expected [1, C], got " + shape_str(x.shape()));
  }
  const std::int64_t c = x.dim(1);
  Tensor out({n, c});
  out.matrix().rowwise() = x.value().matrix().row(0);
  return make_result(std::move(out), {x}, "repeat_rows",
                     [x, c](const Tensor& g, const Tensor&) {
                       Tensor dx({1, c});
                       dx.matrix() = g.matrix().colwise().sum();
                       accumulate_grad(x, std::move(dx));
                     });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()) + " in " + current_scope());
  }
  Tensor out({a.dim(0), b.dim(1)});
  out.matrix().noalias() = a.value().matrix() * b.value().matrix();
  return make_result(std::move(out), {a, b}, "matmul",
                     [a, b](const Tensor& g, const Tensor&) {
                       if (a.requires_grad()) {
                         Tensor da(a.shape());
                         da.matrix().noalias() = g.matrix() * b.value().matrix().transpose();
                         accumulate_grad(a, std::move(da));
                       }
                       if (b.requires_grad()) {
                         Tensor db(b.shape());
                         db.matrix().noalias() = a.value().matrix().transpose() * g.matrix();
                         accumulate_grad(b, std::move(db));
                       }
                     });
}

Var softmax_rows(const Var& x) {
  require_rank(x, 2, "softmax_rows");
  Tensor out = x.value();
  auto m = out.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
  return make_result(std::move(out), {x}, "softmax_rows",
                     [x](const Tensor& g, const Tensor& y) {
                       Tensor dx(x.shape());
                       auto d = dx.matrix();
                       const auto ym = y.matrix();
                       const auto gm = g.matrix();
                       for (Eigen::Index i = 0; i < d.rows(); ++i) {
                         const double dot = gm.row(i).dot(ym.row(i));
                         d.row(i) = ym.row(i).array() * (gm.row(i).array() - dot);
                       }
                       accumulate_grad(x, std::move(dx));
                     });
}

namespace {

struct Conv1dDims {
  std::int64_t batch, length, cin, cout, taps, pad;
};

Conv1dDims conv1d_dims(const Var& x, const Var& w) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if ((xs.size() != 2 && xs.size() != 3) || ws.size() != 3) {
    throw ShapeError("conv1d: expected x [L,C] or [B,L,C] and w [k,Cin,Cout], got " +
                     shape_str(xs) + " and " + shape_str(ws) + " in " +
                     current_scope());
  }
  Conv1dDims d;
  d.batch = xs.size() == 3 ? xs[0] : 1;
  d.length = xs[xs.size() - 2];
  d.cin = xs.back();
  d.taps = ws[0];
  d.cout = ws[2];
  if (ws[1] != d.cin) {
    throw ShapeError("conv1d: input has " + std::to_string(d.cin) +
                     " channels, weight expects " + std::to_string(ws[1]) +
                     " in " + current_scope());
  }
  if (d.taps % 2 == 0) throw ShapeError("conv1d: kernel size must be odd");
  d.pad = (d.taps - 1) / 2;
  return d;
}

// Calls f(row, j, s, t0, n) for every batch (first row `row`) and tap j with
// offset s = j - pad: output rows [t0, t0 + n) read input rows shifted by s.
template <typename F>
void for_each_tap(const Conv1dDims& d, F f) {
  for (std::int64_t b = 0; b < d.batch; ++b) {
    for (std::int64_t j = 0; j < d.taps; ++j) {
      const std::int64_t s = j - d.pad;
      const std::int64_t t0 = std::max<std::int64_t>(0, -s);
      const std::int64_t t1 = std::min(d.length, d.length - s);
      if (t1 > t0) f(b * d.length, j, s, t0, t1 - t0);
    }
  }
}

}  // namespace

Var conv1d(const Var& x, const Var& w) {
  const Conv1dDims d = conv1d_dims(x, w);
  const std::int64_t rows = d.batch * d.length;
  Shape out_shape = x.shape();
  out_shape.back() = d.cout;
  Tensor out(out_shape);
  {
    const ConstMatrixMap xm(x.value().data(), rows, d.cin);
    MatrixMap om(out.data(), rows, d.cout);
    const double* wp = w.value().data();
    for_each_tap(d, [&](std::int64_t row, std::int64_t j, std::int64_t s, std::int64_t t0,
                        std::int64_t n) {
      const ConstMatrixMap wj(wp + j * d.cin * d.cout, d.cin, d.cout);
      om.middleRows(row + t0, n).noalias() += xm.middleRows(row + t0 + s, n) * wj;
    });
  }
  return make_result(
      std::move(out), {x, w}, "conv1d", [x, w, d, rows](const Tensor& g, const Tensor&) {
        const ConstMatrixMap gm(g.data(), rows, d.cout);
        const double* wp = w.value().data();
        if (w.requires_grad()) {
          const ConstMatrixMap xm(x.value().data(), rows, d.cin);
          Tensor dw(w.shape());
          for_each_tap(d, [&](std::int64_t row, std::int64_t j, std::int64_t s,
                              std::int64_t t0, std::int64_t n) {
            MatrixMap(dw.data() + j * d.cin * d.cout, d.cin, d.cout).noalias() +=
                xm.middleRows(row + t0 + s, n).transpose() * gm.middleRows(row + t0, n);
          });
          accumulate_grad(w, std::move(dw));
        }
        if (x.requires_grad()) {
          Tensor dx(x.shape());
          MatrixMap dxm(dx.data(), rows, d.cin);
          for_each_tap(d, [&](std::int64_t row, std::int64_t j, std::int64_t s,
                              std::int64_t t0, std::int64_t n) {
            const ConstMatrixMap wj(wp + j * d.cin * d.cout, d.cin, d.cout);
            dxm.middleRows(row + t0 + s, n).noalias() +=
                gm.middleRows(row + t0, n) * wj.transpose();
          });
          accumulate_grad(x, std::move(dx));
        }
      });
}

Var flip_taps(const Var& w) {
  require_rank(w, 3, "flip_taps");
  const std::int64_t k = w.dim(0), ci = w.dim(1), co = w.dim(2);
  Tensor out({k, co, ci});
  for (std::int64_t j = 0; j < k; ++j) {
    for (std::int64_t a = 0; a < ci; ++a) {
      for (std::int64_t b = 0; b < co; ++b) {
        out[(j * co + b) * ci + a] = w.value()[((k - 1 - j) * ci + a) * co + b];
      }
    }
  }
  return make_result(std::move(out), {w}, "flip_taps",
                     [w, k, ci, co](const Tensor& g, const Tensor&) {
                       Tensor dw(w.shape());
                       for (std::int64_t j = 0; j < k; ++j) {
                         for (std::int64_t a = 0; a < ci; ++a) {
                           for (std::int64_t b = 0; b < co; ++b) {
                             dw[((k - 1 - j) * ci + a) * co + b] =
                                 g[(j * co + b) * ci + a];
                           }
                         }
                       }
                       accumulate_grad(w, std::move(dw));
                     });
}

std::int64_t conv_output_size(std::int64_t in, std::int64_t filter,
                              std::int64_t stride, std::int64_t pad) {
  const std::int64_t span = in + 2 * pad - filter;
  if (span < 0 || stride <= 0) {
    throw ShapeError("conv: filter " + std::to_string(filter) +
                     " larger than padded input " + std::to_string(in + 2 * pad));
  }
  return span / stride + 1;
}

Var conv2d(const Var& x, const Var& w, const Var& bias, Conv2dGeometry geo) {
  require_rank(x, 3, "conv2d");
  require_rank(w, 4, "conv2d");
  const std::int64_t cin = x.dim(0), t_in = x.dim(1), f_in = x.dim(2);
  const std::int64_t cout = w.dim(0), kt = w.dim(2), kf = w.dim(3);
  if (w.dim(1) != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(cin) +
                     " channels, weight expects " + std::to_string(w.dim(1)) +
                     " in " + current_scope());
  }
  const bool has_bias = bias.defined();
  if (has_bias && static_cast<std::int64_t>(bias.value().size()) != cout) {
    throw ShapeError("conv2d: bias size mismatch");
  }
  const std::int64_t t_out = conv_output_size(t_in, kt, geo.stride_t, geo.pad_t);
  const std::int64_t f_out = conv_output_size(f_in, kf, geo.stride_f, geo.pad_f);
  Tensor out({cout, t_out, f_out});
  const double* xv = x.value().data();
  const double* wv = w.value().data();
  for (std::int64_t co = 0; co < cout; ++co) {
    const double b0 = has_bias ? bias.value()[co] : 0.0;
    for (std::int64_t to = 0; to < t_out; ++to) {
      for (std::int64_t fo = 0; fo < f_out; ++fo) {
        double acc = b0;
        for (std::int64_t ci = 0; ci < cin; ++ci) {
          for (std::int64_t i = 0; i < kt; ++i) {
            const std::int64_t ti = to * geo.stride_t + i - geo.pad_t;
            if (ti < 0 || ti >= t_in) continue;
            const double* xrow = xv + (ci * t_in + ti) * f_in;
            const double* wrow = wv + ((co * cin + ci) * kt + i) * kf;
            for (std::int64_t j = 0; j < kf; ++j) {
              const std::int64_t fi = fo * geo.stride_f + j - geo.pad_f;
              if (fi < 0 || fi >= f_in) continue;
              acc += xrow[fi] * wrow[j];
            }
          }
        }
        out[(co * t_out + to) * f_out + fo] = acc;
      }
    }
  }
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(bias);
  return make_result(
      std::move(out), std::move(inputs), "conv2d",
      [x, w, bias, geo, has_bias, cin, t_in, f_in, cout, kt, kf, t_out, f_out](
          const Tensor& g, const Tensor&) {
        Tensor dx(x.shape()), dw(w.shape());
        const double* xv = x.value().data();
        const double* wv = w.value().data();
        for (std::int64_t co = 0; co < cout; ++co) {
          for (std::int64_t to = 0; to < t_out; ++to) {
            for (std::int64_t fo = 0; fo < f_out; ++fo) {
              const double go = g[(co * t_out + to) * f_out + fo];
              if (go == 0.0) continue;
              for (std::int64_t ci = 0; ci < cin; ++ci) {
                for (std::int64_t i = 0; i < kt; ++i) {
                  const std::int64_t ti = to * geo.stride_t + i - geo.pad_t;
                  if (ti < 0 || ti >= t_in) continue;
                  const std::int64_t xoff = (ci * t_in + ti) * f_in;
                  const std::int64_t woff = ((co * cin + ci) * kt + i) * kf;
                  for (std::int64_t j = 0; j < kf; ++j) {
                    const std::int64_t fi = fo * geo.stride_f + j - geo.pad_f;
                    if (fi < 0 || fi >= f_in) continue;
                    dx[xoff + fi] += go * wv[woff + j];
                    dw[woff + j] += go * xv[xoff + fi];
                  }
                }
              }
            }
          }
        }
        accumulate_grad(x, std::move(dx));
        accumulate_grad(w, std::move(dw));
        if (has_bias && bias.requires_grad()) {
          Tensor db(bias.shape());
          for (std::int64_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < t_out * f_out; ++i) {
              acc += g[co * t_out * f_out + i];
            }
            db[co] = acc;
          }
          accumulate_grad(bias, std::move(db));
        }
      });
}

namespace {

inline double sigm(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void check_gru_shapes(std::int64_t in, const Tensor& w_ih, const Tensor& w_hh,
                      const Tensor& b_ih, const Tensor& b_hh) {
  if (w_ih.rank() != 2 || w_hh.rank() != 2) {
    throw ShapeError("gru: weights must be rank 2");
  }
  const std::int64_t h3 = w_hh.dim(1);
  const std::int64_t h = w_hh.dim(0);
  if (h3 != 3 * h || w_ih.dim(1) != h3 ||
      static_cast<std::int64_t>(b_ih.size()) != h3 ||
      static_cast<std::int64_t>(b_hh.size()) != h3) {
    throw ShapeError("gru: inconsistent gate widths " + shape_str(w_ih.shape()) +
                     " " + shape_str(w_hh.shape()) + " in " + current_scope());
  }
  if (w_ih.dim(0) != in) {
    throw ShapeError("gru: input width " + std::to_string(in) +
                     " does not match weight " + shape_str(w_ih.shape()) +
                     " in " + current_scope());
  }
}

}  // namespace

std::vector<double> gru_cell(std::span<const double> x,
                             std::span<const double> h, const Tensor& w_ih,
                             const Tensor& w_hh, const Tensor& b_ih,
                             const Tensor& b_hh) {
  check_gru_shapes(static_cast<std::int64_t>(x.size()), w_ih, w_hh, b_ih, b_hh);
  const std::int64_t hd = w_hh.dim(0);
  if (static_cast<std::int64_t>(h.size()) != hd) {
    throw ShapeError("gru_cell: state width mismatch");
  }
  const Eigen::Map<const Eigen::RowVectorXd> xv(x.data(), x.size());
  const Eigen::Map<const Eigen::RowVectorXd> hv(h.data(), h.size());
  const Eigen::RowVectorXd gi =
      xv * w_ih.matrix() + Eigen::Map<const Eigen::RowVectorXd>(b_ih.data(), 3 * hd);
  const Eigen::RowVectorXd gh =
      hv * w_hh.matrix() + Eigen::Map<const Eigen::RowVectorXd>(b_hh.data(), 3 * hd);
  std::vector<double> out(static_cast<std::size_t>(hd));
  for (std::int64_t k = 0; k < hd; ++k) {
    const double r = sigm(gi[k] + gh[k]);
    const double z = sigm(gi[hd + k] + gh[hd + k]);
    const double n = std::tanh(gi[2 * hd + k] + r * gh[2 * hd + k]);
    out[k] = (1.0 - z) * n + z * h[k];
  }
  return out;
}

Var gru(const Var& x, const GruWeights& w) {
  require_rank(x, 2, "gru");
  const std::int64_t steps = x.dim(0);
  check_gru_shapes(x.dim(1), w.w_ih.value(), w.w_hh.value(), w.b_ih.value(),
                   w.b_hh.value());
  const std::int64_t hd = w.w_hh.dim(0);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Cache per step: previous state, gates and the recurrent candidate term.
  auto cache = std::make_shared<std::vector<RowMat>>(5);
  RowMat& hs = (*cache)[0];    // [N+1, H], row 0 = zero state
  RowMat& rs = (*cache)[1];
  RowMat& zs = (*cache)[2];
  RowMat& ns = (*cache)[3];
  RowMat& ghn = (*cache)[4];
  hs = RowMat::Zero(steps + 1, hd);
  rs.resize(steps, hd);
  zs.resize(steps, hd);
  ns.resize(steps, hd);
  ghn.resize(steps, hd);

  RowMat gi = x.value().matrix() * w.w_ih.value().matrix();
  gi.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(w.b_ih.value().data(), 3 * hd);
  const auto whh = w.w_hh.value().matrix();
  const Eigen::Map<const Eigen::RowVectorXd> bhh(w.b_hh.value().data(), 3 * hd);
  Eigen::RowVectorXd gh(3 * hd);
  for (std::int64_t t = 0; t < steps; ++t) {
    gh.noalias() = hs.row(t) * whh;
    gh += bhh;
    for (std::int64_t k = 0; k < hd; ++k) {
      const double r = sigm(gi(t, k) + gh[k]);
      const double z = sigm(gi(t, hd + k) + gh[hd + k]);
      const double n = std::tanh(gi(t, 2 * hd + k) + r * gh[2 * hd + k]);
      rs(t, k) = r;
      zs(t, k) = z;
      ns(t, k) = n;
      ghn(t, k) = gh[2 * hd + k];
      hs(t + 1, k) = (1.0 - z) * n + z * hs(t, k);
    }
  }
  Tensor out({steps, hd});
  out.matrix() = hs.bottomRows(steps);

  return make_result(
      std::move(out), {x, w.w_ih, w.w_hh, w.b_ih, w.b_hh}, "gru",
      [x, w, cache, steps, hd](const Tensor& g, const Tensor&) {
        const RowMat& hs = (*cache)[0];
        const RowMat& rs = (*cache)[1];
        const RowMat& zs = (*cache)[2];
        const RowMat& ns = (*cache)[3];
        const RowMat& ghn = (*cache)[4];
        const auto whh = w.w_hh.value().matrix();
        RowMat dgi(steps, 3 * hd);
        RowMat dwhh = RowMat::Zero(hd, 3 * hd);
        Eigen::RowVectorXd dbhh = Eigen::RowVectorXd::Zero(3 * hd);
        Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(hd);
        Eigen::RowVectorXd dgh(3 * hd);
        const auto gm = g.matrix();
        for (std::int64_t t = steps - 1; t >= 0; --t) {
          Eigen::RowVectorXd dh = gm.row(t) + dh_next;
          Eigen::RowVectorXd dh_prev(hd);
          for (std::int64_t k = 0; k < hd; ++k) {
            const double r = rs(t, k), z = zs(t, k), n = ns(t, k);
            const double hp = hs(t, k);
            const double dn = dh[k] * (1.0 - z);
            const double dz = dh[k] * (hp - n);
            dh_prev[k] = dh[k] * z;
            const double dan = dn * (1.0 - n * n);
            const double dr = dan * ghn(t, k);
            const double dar = dr * r * (1.0 - r);
            const double daz = dz * z * (1.0 - z);
            dgi(t, k) = dar;
            dgi(t, hd + k) = daz;
            dgi(t, 2 * hd + k) = dan;
            dgh[k] = dar;
            dgh[hd + k] = daz;
            dgh[2 * hd + k] = dan * r;
          }
          dh_prev.noalias() += dgh * whh.transpose();
          dwhh.noalias() += hs.row(t).transpose() * dgh;
          dbhh += dgh;
          dh_next = dh_prev;
        }
        if (x.requires_grad()) {
          Tensor dx(x.shape());
          dx.matrix().noalias() = dgi * w.w_ih.value().matrix().transpose();
          accumulate_grad(x, std::move(dx));
        }
        if (w.w_ih.requires_grad()) {
          Tensor dwih(w.w_ih.shape());
          dwih.matrix().noalias() = x.value().matrix().transpose() * dgi;
          accumulate_grad(w.w_ih, std::move(dwih));
        }
        if (w.b_ih.requires_grad()) {
          Tensor dbih(w.b_ih.shape());
          MatrixMap(dbih.data(), 1, 3 * hd) = dgi.colwise().sum();
          accumulate_grad(w.b_ih, std::move(dbih));
        }
        if (w.w_hh.requires_grad()) {
          Tensor d(w.w_hh.shape());
          d.matrix() = dwhh;
          accumulate_grad(w.w_hh, std::move(d));
        }
        if (w.b_hh.requires_grad()) {
          Tensor d(w.b_hh.shape());
          MatrixMap(d.data(), 1, 3 * hd) = dbhh;
          accumulate_grad(w.b_hh, std::move(d));
        }
      });
}

}  // namespace dnr::nn
