// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/nn/adam.h"
#include "dnr/nn/gradcheck.h"
#include "dnr/nn/layers.h"
#include "dnr/nn/ops.h"
#include "dnr/nn/param_store.h"

namespace dnr::nn {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = scale * rng.normal();
  return t;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "dnr_nn_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Autograd, DenseWeightGradientIsOuterProduct) {
  Rng rng(1);
  Var x(random_tensor({1, 3}, rng));
  Var w(random_tensor({3, 2}, rng), true);
  Tensor g = random_tensor({1, 2}, rng);
  backward(matmul(x, w), g);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(w.grad().at(i, j), x.value()[i] * g[j]);
    }
  }
}

TEST(Autograd, ZeroUpstreamGradientGivesZeroGrads) {
  Rng rng(2);
  ParamStore store;
  BiGru gru(store, "g", 3, 4, rng);
  Dense dense(store, "d", 8, 2, rng);
  Var x(random_tensor({6, 3}, rng));
  backward(dense(gru(x)), Tensor({6, 2}));
  for (const Var& p : store.trainable()) {
    const Tensor g = p.grad();
    for (double v : g.vec()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Autograd, GradientsAccumulateUntilZeroed) {
  Var x(Tensor({2}, 1.5), true);
  backward(sum(square(x)));
  backward(sum(square(x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Autograd, SharedSubexpressionReceivesBothPaths) {
  Var x(Tensor({1}, 2.0), true);
  Var y = mul(x, x);
  backward(add(y, scale(y, 3.0)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 16.0);
}

TEST(Autograd, NonFiniteValueFailsFastWithScope) {
  Var x(Tensor({1}, 1000.0), true);
  NameScope scope("encoder");
  try {
    exp(x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos);
  }
}

TEST(Autograd, NoGradGuardDropsGraph) {
  Var x(Tensor({2}, 1.0), true);
  Var y;
  {
    NoGradGuard guard;
    y = square(x);
  }
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(grad_enabled());
}

TEST(Autograd, ShapeMismatchIsShapeError) {
  Var a(Tensor({2, 3})), b(Tensor({3, 2}));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(conv1d(a, Var(Tensor({2, 3, 1}))), ShapeError);
}

class GradientSuite : public ::testing::TestWithParam<int> {};

TEST_P(GradientSuite, EveryPrimitivePassesFiniteDifferences) {
  for (const auto& c : primitive_gradient_suite(1000 + GetParam())) {
    EXPECT_LT(c.result.max_rel_error, 1e-4)
        << c.name << " worst input " << c.result.worst_input;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientSuite, ::testing::Range(0, 10));

TEST(Ops, Conv1dMatchesDirectSum) {
  Rng rng(3);
  Tensor x = random_tensor({6, 2}, rng);
  Tensor w = random_tensor({3, 2, 4}, rng);
  Var y = conv1d(Var(x), Var(w));
  for (int t = 0; t < 6; ++t) {
    for (int o = 0; o < 4; ++o) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        const int s = t + j - 1;
        if (s < 0 || s >= 6) continue;
        for (int c = 0; c < 2; ++c) acc += x.at(s, c) * w[(j * 2 + c) * 4 + o];
      }
      EXPECT_NEAR(y.value().at(t, o), acc, 1e-12);
    }
  }
}

TEST(Ops, FlipTapsGivesConvolutionAdjoint) {
  Rng rng(4);
  Var w(random_tensor({5, 3, 2}, rng));
  Tensor x = random_tensor({9, 3}, rng);
  Tensor g = random_tensor({9, 2}, rng);
  const Tensor y = conv1d(Var(x), w).value();
  const Tensor z = conv1d(Var(g), flip_taps(w)).value();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (std::size_t i = 0; i < z.size(); ++i) rhs += z[i] * x[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Ops, Conv2dMatchesDirectSum) {
  Rng rng(5);
  Tensor x = random_tensor({2, 5, 11}, rng);
  Tensor w = random_tensor({3, 2, 5, 5}, rng);
  Tensor b = random_tensor({3}, rng);
  Var y = conv2d(Var(x), Var(w), Var(b), {1, 2, 2, 2});
  ASSERT_EQ(y.shape(), (Shape{3, 5, 6}));
  for (int co = 0; co < 3; ++co) {
    for (int to = 0; to < 5; ++to) {
      for (int fo = 0; fo < 6; ++fo) {
        double acc = b[co];
        for (int ci = 0; ci < 2; ++ci) {
          for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 5; ++j) {
              const int ti = to + i - 2, fi = 2 * fo + j - 2;
              if (ti < 0 || ti >= 5 || fi < 0 || fi >= 11) continue;
              acc += x[(ci * 5 + ti) * 11 + fi] * w[((co * 2 + ci) * 5 + i) * 5 + j];
            }
          }
        }
        EXPECT_NEAR(y.value()[(co * 5 + to) * 6 + fo], acc, 1e-12);
      }
    }
  }
}

struct ConvCase {
  std::int64_t in, filter, stride, pad, out;
};

TEST(Ops, ConvOutputSizeTable) {
  const ConvCase cases[] = {
      {80, 5, 2, 2, 40}, {40, 5, 2, 2, 20}, {20, 5, 2, 2, 10}, {10, 5, 2, 2, 5},
      {5, 5, 5, 2, 1},   {7, 3, 1, 1, 7},   {8, 3, 2, 0, 3},   {5, 5, 1, 0, 1},
      {11, 4, 3, 1, 4},  {1, 1, 1, 0, 1},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(conv_output_size(c.in, c.filter, c.stride, c.pad), c.out)
        << c.in << " " << c.filter << " " << c.stride << " " << c.pad;
  }
  EXPECT_THROW(conv_output_size(2, 5, 1, 0), ShapeError);
}

TEST(Ops, ChannelEncoderStackReducesMelToWidthOne) {
  Rng rng(6);
  ParamStore store;
  const std::int64_t channels[] = {32, 64, 64, 128, 256};
  std::int64_t cin = 1;
  Var x(random_tensor({1, 4, 80}, rng));
  for (int l = 0; l < 5; ++l) {
    Conv2d conv(store, "c" + std::to_string(l), cin, channels[l] / 8, 5, 5,
                {1, l < 4 ? 2 : 5, 2, 2}, rng);
    x = conv(x);
    cin = channels[l] / 8;
  }
  EXPECT_EQ(x.shape(), (Shape{32, 4, 1}));
}

// Step-by-step GRU written without Eigen.
std::vector<double> scalar_gru_step(const std::vector<double>& x,
                                    const std::vector<double>& h,
                                    const Tensor& wih, const Tensor& whh,
                                    const Tensor& bih, const Tensor& bhh) {
  const std::size_t H = h.size();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> out(H);
  for (std::size_t k = 0; k < H; ++k) {
    double ir = bih[k], iz = bih[H + k], in = bih[2 * H + k];
    double hr = bhh[k], hz = bhh[H + k], hn = bhh[2 * H + k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      ir += x[i] * wih[i * 3 * H + k];
      iz += x[i] * wih[i * 3 * H + H + k];
      in += x[i] * wih[i * 3 * H + 2 * H + k];
    }
    for (std::size_t j = 0; j < H; ++j) {
      hr += h[j] * whh[j * 3 * H + k];
      hz += h[j] * whh[j * 3 * H + H + k];
      hn += h[j] * whh[j * 3 * H + 2 * H + k];
    }
    const double r = sig(ir + hr), z = sig(iz + hz);
    const double n = std::tanh(in + r * hn);
    out[k] = (1.0 - z) * n + z * h[k];
  }
  return out;
}

TEST(Gru, ZeroEverythingGivesZeroState) {
  Tensor wih({3, 12}), whh({4, 12}), bih({12}), bhh({12});
  std::vector<double> x(3, 0.0), h(4, 0.0);
  for (double v : gru_cell(x, h, wih, whh, bih, bhh)) EXPECT_EQ(v, 0.0);
}

TEST(Gru, SaturatedUpdateGateKeepsState) {
  Rng rng(7);
  const int H = 4;
  Tensor wih = random_tensor({3, 3 * H}, rng), whh = random_tensor({H, 3 * H}, rng);
  Tensor bih({3 * H}), bhh({3 * H});
  for (int k = 0; k < H; ++k) bih[H + k] = 50.0;
  std::vector<double> x{0.3, -0.2, 0.9}, h{0.5, -0.4, 0.1, 0.8};
  const auto out = gru_cell(x, h, wih, whh, bih, bhh);
  for (int k = 0; k < H; ++k) EXPECT_NEAR(out[k], h[k], 1e-6);
}

TEST(Gru, SequenceMatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const int H = 5, In = 3, N = 7;
    Tensor wih = random_tensor({In, 3 * H}, rng), whh = random_tensor({H, 3 * H}, rng);
    Tensor bih = random_tensor({3 * H}, rng), bhh = random_tensor({3 * H}, rng);
    Tensor x = random_tensor({N, In}, rng);
    Var out = gru(Var(x), {Var(wih), Var(whh), Var(bih), Var(bhh)});
    std::vector<double> h(H, 0.0);
    for (int t = 0; t < N; ++t) {
      std::vector<double> xt(x.data() + t * In, x.data() + (t + 1) * In);
      const auto cell = gru_cell(xt, h, wih, whh, bih, bhh);
      h = scalar_gru_step(xt, h, wih, whh, bih, bhh);
      for (int k = 0; k < H; ++k) {
        EXPECT_NEAR(out.value().at(t, k), h[k], 1e-12);
        EXPECT_NEAR(cell[k], h[k], 1e-12);
      }
    }
  }
}

TEST(Gru, BidirectionalBackwardHalfSeesFuture) {
  Rng rng(8);
  ParamStore store;
  BiGru bg(store, "bg", 2, 3, rng);
  Tensor x = random_tensor({5, 2}, rng);
  const Tensor y1 = bg(Var(x)).value();
  x.at(4, 0) += 1.0;
  const Tensor y2 = bg(Var(x)).value();
  ASSERT_EQ(y1.shape(), (Shape{5, 6}));
  for (int k = 0; k < 3; ++k) EXPECT_EQ(y1.at(0, k), y2.at(0, k));
  EXPECT_NE(y1.at(0, 3), y2.at(0, 3));
}

TEST(Attention, EqualLogitsGiveUniformAverage) {
  Rng rng(9);
  Var q(Tensor({1, 8}));
  Var k(random_tensor({5, 8}, rng));
  Var v(random_tensor({5, 8}, rng));
  const AttentionResult r = multi_head_attention(q, k, v, 4);
  for (int c = 0; c < 8; ++c) {
    double mean = 0.0;
    for (int m = 0; m < 5; ++m) mean += v.value().at(m, c) / 5.0;
    EXPECT_NEAR(r.output.value()[c], mean, 1e-12);
  }
}

TEST(Attention, DominantTemplateIsSelected) {
  Rng rng(10);
  Tensor kt({4, 2});
  kt.at(2, 0) = 1.0;
  kt.at(2, 1) = 1.0;
  Var k(kt);
  Var v(random_tensor({4, 2}, rng));
  Var q(Tensor({1, 2}, 1e4));
  const AttentionResult r = multi_head_attention(q, k, v, 2);
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(r.output.value()[c], v.value().at(2, c), 1e-6);
}

TEST(Attention, TemplateWeightsSumToOne) {
  Rng rng(11);
  ParamStore store;
  TemplateAttention att(store, "att", 6, 16, 32, 8, rng);
  const AttentionResult r = att.attend(Var(random_tensor({1, 6}, rng)));
  ASSERT_EQ(r.weights.shape(), (Shape{8, 16}));
  ASSERT_EQ(r.output.shape(), (Shape{1, 32}));
  for (int h = 0; h < 8; ++h) {
    EXPECT_NEAR(r.weights.matrix().row(h).sum(), 1.0, 1e-9);
  }
}

TEST(Attention, TemplateTokenWithFlatQueryIsMeanOfProjectedTemplates) {
  Rng rng(12);
  ParamStore store;
  TemplateAttention att(store, "att", 3, 4, 8, 2, rng);
  for (double& v : att.query_proj.weight.mutable_value().vec()) v = 0.0;
  const Tensor token = att(Var(random_tensor({1, 3}, rng))).value();
  const Tensor values = att.value_proj(att.templates).value();
  Tensor mean({1, 8});
  mean.matrix() = values.matrix().colwise().mean();
  const Tensor expected = att.out_proj(Var(mean)).value();
  for (int c = 0; c < 8; ++c) EXPECT_NEAR(token[c], expected[c], 1e-12);
}

TEST(Attention, IndivisibleWidthRejected) {
  Rng rng(13);
  ParamStore store;
  EXPECT_THROW(TemplateAttention(store, "att", 4, 16, 30, 8, rng), ShapeError);
}

TEST(Adam, ZeroGradientKeepsParametersAndDecaysMoments) {
  Var p(Tensor({3}, 0.7), true);
  Adam adam({p}, {});
  p.mutable_value();
  backward(sum(scale(p, 2.0)));
  adam.step();
  const double m1 = adam.first_moments()[0][0];
  const Tensor before = p.value();
  adam.zero_grad();
  backward(sum(scale(p, 0.0)));
  adam.step();
  EXPECT_DOUBLE_EQ(adam.first_moments()[0][0], 0.9 * m1);
  // With zero gradient the bias-corrected step is still nonzero from momentum;
  // a fresh optimizer with zero gradients must not move.
  Var q(Tensor({3}, 0.7), true);
  Adam fresh({q}, {});
  fresh.step();
  EXPECT_EQ(q.value(), Tensor({3}, 0.7));
  EXPECT_NE(before, p.value());
}

TEST(Adam, FirstStepClosedForm) {
  const double g[] = {0.5, -2.0, 1e-3};
  Var p(Tensor({3}, 1.0), true);
  AdamOptions opt;
  opt.lr = 0.01;
  Adam adam({p}, opt);
  backward(sum(mul(p, Var(Tensor({3}, {g[0], g[1], g[2]})))));
  adam.step();
  for (int i = 0; i < 3; ++i) {
    const double expected = 1.0 - opt.lr * g[i] / (std::abs(g[i]) + opt.eps);
    EXPECT_NEAR(p.value()[i], expected, 1e-15);
  }
}

TEST(Adam, NonFiniteGradientRejected) {
  Var p(Tensor({1}, 1.0), true);
  Adam adam({p}, {});
  accumulate_grad(p, Tensor({1}, std::nan("")));
  EXPECT_THROW(adam.step(), NumericError);
}

std::vector<double> adam_trajectory(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore store;
  Dense d(store, "d", 3, 2, rng);
  Adam adam(store.trainable(), {.lr = 0.01});
  Var x(random_tensor({4, 3}, rng));
  std::vector<double> losses;
  for (int i = 0; i < 20; ++i) {
    adam.zero_grad();
    Var loss = mean(square(add_scalar(d(x), -1.0)));
    losses.push_back(loss.item());
    backward(loss);
    adam.step();
  }
  return losses;
}

TEST(Adam, DeterministicTrajectory) {
  EXPECT_EQ(adam_trajectory(42), adam_trajectory(42));
  EXPECT_LT(adam_trajectory(42).back(), adam_trajectory(42).front());
}

ParamStore random_store(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore s;
  s.add("enc/w", random_tensor({3, 4}, rng));
  s.add("enc/b", random_tensor({4}, rng));
  s.add("post/gru/w_hh", random_tensor({2, 2, 3}, rng));
  s.add("norm/mean", random_tensor({5}, rng), false);
  for (auto& [name, v] : s.entries()) {
    Var var = v;
    for (double& x : var.mutable_value().vec()) x = static_cast<float>(x);
  }
  return s;
}

TEST(ParamStore, RoundTripIsBitwise) {
  ParamStore a = random_store(1);
  const auto path = temp_path("roundtrip.dnrw");
  a.save(path);
  ParamStore b = random_store(2);
  b.load(path);
  EXPECT_EQ(a.snapshot(), b.snapshot());
  a.save(temp_path("roundtrip2.dnrw"));
  std::ifstream f1(path, std::ios::binary), f2(temp_path("roundtrip2.dnrw"), std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(s1, s2);
}

TEST(ParamStore, NamesAreSorted) {
  const auto names = random_store(1).names();
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_EQ(random_store(1).parameter_count(), 12 + 4 + 12);
}

TEST(ParamStore, CorruptMagicNamesFile) {
  const auto path = temp_path("bad_magic.dnrw");
  random_store(1).save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  try {
    read_tensor_file(path);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("bad_magic.dnrw"), std::string::npos);
  }
}

TEST(ParamStore, TruncatedAndVersionErrors) {
  const auto path = temp_path("trunc.dnrw");
  random_store(1).save(path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  EXPECT_THROW(read_tensor_file(path), IoError);
  random_store(1).save(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.put(static_cast<char>(9));
  }
  EXPECT_THROW(read_tensor_file(path), IoError);
  EXPECT_THROW(read_tensor_file(temp_path("does_not_exist.dnrw")), IoError);
}

TEST(ParamStore, StrictLoadReportsMissingAndUnknownNames) {
  const auto path = temp_path("partial.dnrw");
  ParamStore small;
  small.add("enc/w", Tensor({3, 4}));
  small.save(path);
  ParamStore full = random_store(1);
  try {
    full.load(path);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("enc/b"), std::string::npos);
  }
  random_store(1).save(path);
  EXPECT_THROW(small.load(path), ConfigError);
  EXPECT_NO_THROW(full.load(path, true, "enc/"));
}

TEST(ParamStore, ShapeMismatchNamesTensor) {
  const auto path = temp_path("shape.dnrw");
  ParamStore other;
  other.add("enc/w", Tensor({4, 3}));
  other.save(path);
  ParamStore s;
  s.add("enc/w", Tensor({3, 4}));
  try {
    s.load(path);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("enc/w"), std::string::npos);
  }
}

}  // namespace
TEST(Tensor, StorageIsVectorAligned) {
  for (std::int64_t n : {1, 3, 7, 100, 1025}) {
    const Tensor t({n}, 1.0);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % EIGEN_MAX_ALIGN_BYTES, 0u) << n;
    const Tensor copy = t;
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(copy.data()) % EIGEN_MAX_ALIGN_BYTES, 0u) << n;
  }
}

}  // namespace dnr::nn
