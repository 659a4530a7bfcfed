// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/bwe_fre.h"

#include <span>

#include "dnr/common/error.h"
#include "dnr/model/dnr_asp.h"
#include "dnr/nn/ops.h"

namespace dnr::model {

using nn::Tensor;
using nn::Var;

BandStack::BandStack(nn::ParamStore& store, const std::string& prefix, std::int64_t in,
                     std::int64_t out, const ModelConfig& config, Rng& rng,
                     nn::Init out_init) {
  std::int64_t width = in;
  if (config.bf_gru_hidden > 0) {
    gru0_.emplace(store, prefix + "gru0", in, config.bf_gru_hidden, rng);
    gru1_.emplace(store, prefix + "gru1", 2 * config.bf_gru_hidden, config.bf_gru_hidden, rng);
    width = 2 * config.bf_gru_hidden;
  }
  conv0_ = nn::Conv1d(store, prefix + "conv0", width, config.bf_width, config.bf_taps, rng);
  conv1_ = nn::Conv1d(store, prefix + "conv1", config.bf_width, config.bf_width,
                      config.bf_taps, rng);
  out_ = nn::Dense(store, prefix + "out", config.bf_width, out, rng, out_init);
}

Var BandStack::operator()(const Var& x) const {
  Var h = x;
  if (gru0_) h = (*gru1_)((*gru0_)(h));
  h = nn::relu(conv0_(h));
  h = nn::relu(conv1_(h));
  return out_(h);
}

namespace {

std::vector<double> slice(std::span<const double> v, int start, int len) {
  return std::vector<double>(v.begin() + start, v.begin() + start + len);
}

Var row_constant(const std::vector<double>& v) {
  return Var(Tensor({static_cast<std::int64_t>(v.size())}, v));
}

Var affine(const Var& x, const std::vector<double>& mul, const std::vector<double>& add) {
  return nn::add_bias(nn::mul_row(x, row_constant(mul)), row_constant(add));
}

}  // namespace

BweFreModels::BweFreModels(const ModelConfig& config, std::uint64_t seed,
                           const enhance::BandLayout& layout)
    : config_(config),
      layout_(layout),
      critic_rng_(derive_seed(seed, 1)),
      critics_(store_, kBweCritic, layout.high_bins(), config, critic_rng_) {
  config_.validate();
  if (layout_.k_full != config_.bins()) {
    throw ConfigError("band layout expects " + std::to_string(layout_.k_full) +
                      " bins but the model has " + std::to_string(config_.bins()));
  }
  Rng rng(derive_seed(seed, 0));
  full_mean_ = store_.add("norm/full_mean", Tensor({layout_.k_full}, 0.0), false);
  full_std_ = store_.add("norm/full_std", Tensor({layout_.k_full}, 1.0), false);
  fine_std_ = store_.add("norm/fine_std", Tensor({layout_.k_fine}, 1.0), false);
  bwe_ = BandStack(store_, kBwe, layout_.k_nb, layout_.high_bins(), config_, rng,
                   nn::Init::kGlorot);
  fre_ = BandStack(store_, kFre, layout_.k_full, layout_.k_fine, config_, rng,
                   nn::Init::kZero);
}

void BweFreModels::set_norm_stats(const NormStats& s) {
  if (static_cast<int>(s.c_mean.size()) != layout_.k_full ||
      static_cast<int>(s.fine_std.size()) != layout_.k_fine) {
    throw ShapeError("BWE/FRE statistics: expected " + std::to_string(layout_.k_full) +
                     " and " + std::to_string(layout_.k_fine) + " bins");
  }
  Var a = full_mean_, b = full_std_, c = fine_std_;
  a.mutable_value().vec().assign(s.c_mean.begin(), s.c_mean.end());
  b.mutable_value().vec().assign(s.c_std.begin(), s.c_std.end());
  c.mutable_value().vec().assign(s.fine_std.begin(), s.fine_std.end());
}

Var BweFreModels::bwe(const Var& narrow) const {
  nn::NameScope scope("bwe");
  if (narrow.value().rank() != 2 || narrow.dim(1) != layout_.k_nb) {
    throw ShapeError("BWE input: expected [N, " + std::to_string(layout_.k_nb) + "], got " +
                     nn::shape_str(narrow.shape()));
  }
  const auto& mean = full_mean_.value().vec();
  const auto& sd = full_std_.value().vec();
  std::vector<double> inv(layout_.k_nb), shift(layout_.k_nb);
  for (int j = 0; j < layout_.k_nb; ++j) {
    inv[j] = 1.0 / sd[j];
    shift[j] = -mean[j] / sd[j];
  }
  const Var out = bwe_(affine(narrow, inv, shift));
  const int hb = layout_.high_bins(), start = layout_.k_nb - 1;
  return affine(out, slice(sd, start, hb), slice(mean, start, hb));
}

Var BweFreModels::fre(const signal::Las& full) const {
  nn::NameScope scope("fre");
  if (full.num_bins() != layout_.k_full) {
    throw ShapeError("FRE input: expected " + std::to_string(layout_.k_full) + " bins, got " +
                     std::to_string(full.num_bins()));
  }
  const auto& mean = full_mean_.value().vec();
  const auto& sd = full_std_.value().vec();
  std::vector<double> inv(layout_.k_full), shift(layout_.k_full);
  for (int j = 0; j < layout_.k_full; ++j) {
    inv[j] = 1.0 / sd[j];
    shift[j] = -mean[j] / sd[j];
  }
  const Var x = affine(Var(to_tensor(full.values)), inv, shift);
  const Var base(to_tensor(enhance::fre_upsample_reference(full, layout_).values));
  return nn::add(base, nn::mul_row(fre_(x), Var(fine_std_.value())));
}

signal::Las BweFreModels::extend(const signal::Las& full) const {
  nn::NoGradGuard guard;
  const auto [narrow, high] = enhance::band_split(full, layout_);
  const Var predicted = bwe(Var(to_tensor(narrow.values)));
  signal::Las high_hat{Matrix(predicted.dim(0), predicted.dim(1)), full.config};
  for (std::int64_t i = 0; i < predicted.dim(0); ++i) {
    for (std::int64_t j = 0; j < predicted.dim(1); ++j) {
      high_hat.values(i, j) = predicted.value().at(i, j);
    }
  }
  const signal::Las merged = enhance::band_merge(narrow, high_hat, layout_);
  return to_las(fre(merged), layout_.k_fine * 2 - 2);
}

}  // namespace dnr::model
