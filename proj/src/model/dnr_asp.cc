// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/dnr_asp.h"

#include "dnr/common/error.h"
#include "dnr/enhance/ops.h"
#include "dnr/nn/ops.h"

namespace dnr::model {

using nn::Tensor;
using nn::Var;

std::vector<std::string> submodule_prefixes() {
  return {kChannelEncoder, kConverter, kNoiseEncoder, kReverbEncoder, kPostModule};
}

namespace {

Tensor filled(std::int64_t n, double v) { return Tensor({n}, v); }

Var constant(const std::vector<double>& v) {
  return Var(Tensor({static_cast<std::int64_t>(v.size())}, v));
}

void copy_into(const Var& dst, const std::vector<double>& src, const std::string& name) {
  if (dst.value().size() != src.size()) {
    throw ShapeError("normalization buffer " + name + ": expected " +
                     std::to_string(dst.value().size()) + " values, got " +
                     std::to_string(src.size()));
  }
  Var target = dst;
  target.mutable_value().vec().assign(src.begin(), src.end());
}

// (x - mean) / std as a differentiable affine map with constant statistics.
Var normalize(const Var& x, const Var& mean, const Var& stdev) {
  std::vector<double> neg = mean.value().to_vector(), inv = stdev.value().to_vector();
  for (double& v : neg) v = -v;
  for (double& v : inv) v = 1.0 / v;
  return nn::mul_row(nn::add_bias(x, constant(neg)), constant(inv));
}

Var denormalize(const Var& x, const Var& mean, const Var& stdev) {
  return nn::add_bias(nn::mul_row(x, Var(stdev.value())), Var(mean.value()));
}

}  // namespace

DnrAspModel::DnrAspModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::int64_t k = config_.bins();
  const std::int64_t mel = config_.mel_dim;
  const std::int64_t d = config_.token_dim();
  const std::int64_t cond = config_.acoustic_dim() + d;

  mel_mean_ = store_.add("norm/mel_mean", filled(mel, 0.0), false);
  mel_std_ = store_.add("norm/mel_std", filled(mel, 1.0), false);
  lf0_stats_ = store_.add("norm/lf0", Tensor({2}, {0.0, 1.0}), false);
  nr_mean_ = store_.add("norm/nr_mean", filled(k, 0.0), false);
  nr_std_ = store_.add("norm/nr_std", filled(k, 1.0), false);
  ne_mean_ = store_.add("norm/ne_mean", filled(k, 0.0), false);
  ne_std_ = store_.add("norm/ne_std", filled(k, 1.0), false);
  c_mean_ = store_.add("norm/c_mean", filled(k, 0.0), false);
  c_std_ = store_.add("norm/c_std", filled(k, 1.0), false);

  const std::string ce = kChannelEncoder;
  std::int64_t width = mel;
  if (config_.enc_gru_hidden > 0) {
    enc_gru_.emplace(store_, ce + "gru", mel, config_.enc_gru_hidden, rng);
    width = 2 * config_.enc_gru_hidden;
  }
  std::int64_t cin = 1;
  for (std::size_t i = 0; i < config_.enc_channels.size(); ++i) {
    const bool last = i + 1 == config_.enc_channels.size();
    nn::Conv2dGeometry g{1, last ? 5 : 2, (config_.enc_kt - 1) / 2, (config_.enc_kf - 1) / 2};
    enc_convs_.emplace_back(store_, ce + "conv" + std::to_string(i), cin,
                            config_.enc_channels[i], config_.enc_kt, config_.enc_kf, g, rng);
    width = nn::conv_output_size(width, config_.enc_kf, g.stride_f, g.pad_f);
    cin = config_.enc_channels[i];
  }
  if (width != 1) {
    throw ConfigError("channel encoder leaves a frequency width of " + std::to_string(width) +
                      " instead of 1");
  }
  attention_ = nn::TemplateAttention(store_, ce + "attention", d, config_.num_templates, d,
                                     config_.heads, rng);

  const std::string cv = kConverter;
  conv_c1_ = nn::Conv1d(store_, cv + "conv0", cond, config_.converter_width,
                        config_.converter_taps, rng);
  conv_c2_ = nn::Conv1d(store_, cv + "conv1", config_.converter_width, config_.converter_width,
                        config_.converter_taps, rng);
  conv_out_ = nn::Dense(store_, cv + "out", config_.converter_width, k, rng);

  const std::string ne = kNoiseEncoder;
  noise_c1_ = nn::Conv1d(store_, ne + "las/conv0", cond, config_.noise_width,
                         config_.noise_taps, rng);
  noise_c2_ = nn::Conv1d(store_, ne + "las/conv1", config_.noise_width, config_.noise_width,
                         config_.noise_taps, rng);
  noise_out_ = nn::Dense(store_, ne + "las/out", config_.noise_width, k, rng);
  alpha_conv_ = nn::Conv1d(store_, ne + "alpha/conv0", cond, config_.alpha_width,
                           config_.alpha_taps, rng);
  alpha_out_ = nn::Dense(store_, ne + "alpha/out", config_.alpha_width, 1, rng);
  alpha_out_.bias.mutable_value()[0] = -2.0;

  const std::string re = kReverbEncoder;
  std::int64_t rev_in = cond;
  if (config_.reverb_gru_hidden > 0) {
    rev_gru_.emplace(store_, re + "gru", cond, config_.reverb_gru_hidden, rng);
    rev_in = 2 * config_.reverb_gru_hidden;
  }
  rev_conv_ = nn::Conv1d(store_, re + "conv0", rev_in, config_.reverb_width,
                         config_.reverb_taps, rng);
  rev_out_ = nn::Dense(store_, re + "out", config_.reverb_width, config_.rir_length, rng);
  // Start near a unit impulse.
  for (double& v : rev_out_.weight.mutable_value().vec()) v *= 0.01;
  rev_out_.bias.mutable_value()[0] = 1.0;

  const std::string po = kPostModule;
  std::int64_t post_in = k + d;
  if (config_.post_gru_hidden > 0) {
    post_gru_.emplace(store_, po + "gru", post_in, config_.post_gru_hidden, rng);
    post_in = 2 * config_.post_gru_hidden;
  }
  post_in_ = nn::Dense(store_, po + "in", post_in, k, rng);
  post_c1_ = nn::Conv1d(store_, po + "conv0", k, config_.post_width, config_.post_taps, rng);
  post_c2_ = nn::Conv1d(store_, po + "conv1", config_.post_width, config_.post_width,
                        config_.post_taps, rng);
  post_out_ = nn::Dense(store_, po + "out", config_.post_width, k, rng, nn::Init::kZero);
}

void DnrAspModel::set_norm_stats(const NormStats& s) {
  copy_into(mel_mean_, s.mel_mean, "mel_mean");
  copy_into(mel_std_, s.mel_std, "mel_std");
  copy_into(lf0_stats_, {s.lf0_mean, s.lf0_std}, "lf0");
  copy_into(nr_mean_, s.nr_mean, "nr_mean");
  copy_into(nr_std_, s.nr_std, "nr_std");
  copy_into(ne_mean_, s.ne_mean, "ne_mean");
  copy_into(ne_std_, s.ne_std, "ne_std");
  copy_into(c_mean_, s.c_mean, "c_mean");
  copy_into(c_std_, s.c_std, "c_std");
}

Var DnrAspModel::acoustic_input(const signal::AcousticFeatures& f) const {
  const std::int64_t n = f.num_frames();
  const std::int64_t mel = config_.mel_dim;
  if (n <= 0) throw ShapeError("acoustic features have no frames");
  if (f.mel.cols() != mel) {
    throw ShapeError("acoustic features: expected " + std::to_string(mel) +
                     " mel channels, got " + std::to_string(f.mel.cols()));
  }
  if (static_cast<std::int64_t>(f.f0.size()) != n ||
      static_cast<std::int64_t>(f.vuv.size()) != n) {
    throw ShapeError("acoustic features: F0/VUV length differs from mel frame count");
  }
  const auto lf0 = log_f0(f);
  const auto& mm = mel_mean_.value();
  const auto& ms = mel_std_.value();
  const double lm = lf0_stats_.value()[0], ls = lf0_stats_.value()[1];
  Tensor x({n, mel + 2});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < mel; ++j) x.at(i, j) = (f.mel(i, j) - mm[j]) / ms[j];
    x.at(i, mel) = f.vuv[i] ? (lf0[i] - lm) / ls : 0.0;
    x.at(i, mel + 1) = f.vuv[i] ? 1.0 : 0.0;
  }
  return Var(std::move(x));
}

Var DnrAspModel::token(const signal::AcousticFeatures& features) const {
  nn::NameScope scope("channel_encoder");
  const Var x = acoustic_input(features);
  const std::int64_t n = x.dim(0);
  Var h = nn::slice_cols(x, 0, config_.mel_dim);
  if (enc_gru_) h = (*enc_gru_)(h);
  h = nn::reshape(h, {1, n, h.dim(1)});
  for (const auto& conv : enc_convs_) h = nn::relu(conv(h));
  const std::int64_t c = h.dim(0);
  h = nn::transpose(nn::reshape(h, {c, n}));
  return attention_(nn::mean_rows(h));
}

Var DnrAspModel::post(const Var& l_tilde, const Var& token) const {
  nn::NameScope scope("post_module");
  const std::int64_t n = l_tilde.dim(0);
  Var h = nn::concat_cols({normalize(l_tilde, c_mean_, c_std_), nn::repeat_rows(token, n)});
  if (post_gru_) h = (*post_gru_)(h);
  h = post_in_(h);
  h = nn::relu(post_c1_(h));
  h = nn::relu(post_c2_(h));
  return nn::add(l_tilde, nn::mul_row(post_out_(h), Var(c_std_.value())));
}

ForwardOutputs DnrAspModel::forward(const signal::AcousticFeatures& features,
                                    const ForwardOptions& options) const {
  ForwardOutputs out;
  out.token = token(features);
  const Var x = acoustic_input(features);
  const std::int64_t n = x.dim(0);
  const Var cond = nn::concat_cols({x, nn::repeat_rows(out.token, n)});
  {
    nn::NameScope scope("converter");
    Var h = nn::relu(conv_c1_(cond));
    h = nn::relu(conv_c2_(h));
    out.l_nr = denormalize(conv_out_(h), nr_mean_, nr_std_);
  }
  {
    nn::NameScope scope("noise_encoder");
    Var h = nn::relu(noise_c1_(cond));
    h = nn::relu(noise_c2_(h));
    out.l_ne = denormalize(noise_out_(h), ne_mean_, ne_std_);
    if (options.alpha_override) {
      out.alpha = Var(Tensor::scalar(*options.alpha_override));
    } else {
      out.alpha = nn::softplus(nn::mean(alpha_out_(nn::relu(alpha_conv_(cond)))));
    }
  }
  {
    nn::NameScope scope("reverb_encoder");
    if (options.rir_override) {
      if (static_cast<int>(options.rir_override->size()) != config_.rir_length) {
        throw ShapeError("RIR override has " + std::to_string(options.rir_override->size()) +
                         " taps, expected " + std::to_string(config_.rir_length));
      }
      out.r_hat = constant(*options.rir_override);
    } else {
      Var h = cond;
      if (rev_gru_) h = (*rev_gru_)(h);
      h = nn::relu(rev_conv_(h));
      out.r_hat = nn::reshape(nn::mean_rows(rev_out_(h)), {config_.rir_length});
    }
  }
  {
    nn::NameScope scope("initial_operation");
    out.l_tilde = enhance::initial_denoise_op(out.l_nr, enhance::rir_magnitude_op(out.r_hat),
                                              out.l_ne, out.alpha);
  }
  out.l_c = post(out.l_tilde, out.token);
  return out;
}

signal::Las to_las(const Var& v, int fft_size) {
  if (v.value().rank() != 2) throw ShapeError("to_las: expected a rank-2 tensor");
  signal::Las l{Matrix(v.dim(0), v.dim(1)), signal::StftConfig::with_fft(fft_size)};
  if (l.config.bins() != v.dim(1)) {
    throw ShapeError("to_las: " + std::to_string(v.dim(1)) + " bins do not match fft size " +
                     std::to_string(fft_size));
  }
  for (std::int64_t i = 0; i < v.dim(0); ++i) {
    for (std::int64_t j = 0; j < v.dim(1); ++j) l.values(i, j) = v.value().at(i, j);
  }
  return l;
}

Tensor to_tensor(const Matrix& m) {
  Tensor t({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.at(i, j) = m(i, j);
  }
  return t;
}

degrade::Rir to_rir(const Var& v) { return degrade::make_rir(v.value().to_vector()); }

}  // namespace dnr::model
