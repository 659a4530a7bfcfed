// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/example.h"

#include <algorithm>
#include <cmath>

#include "dnr/common/error.h"
#include "dnr/signal/wav_io.h"

namespace dnr::model {

using signal::StftConfig;

Inputs make_inputs(const signal::Waveform& degraded, int fft_size) {
  return {signal::acoustic_features(degraded, StftConfig::with_fft(fft_size)), degraded};
}

Example make_example(std::string id, const signal::Waveform& clean,
                     const signal::Waveform& noise, const degrade::Rir& rir,
                     const signal::Waveform& degraded, const signal::Waveform& noisy,
                     int fft_size, int fine_fft_size) {
  const std::size_t n = degraded.size();
  for (const auto* w : {&clean, &noise, &noisy}) {
    if (w->size() != n) {
      throw ShapeError("example " + id + ": signal lengths differ (" + std::to_string(n) +
                       " vs " + std::to_string(w->size()) + ")");
    }
  }
  degrade::validate(rir);
  const StftConfig cfg = StftConfig::with_fft(fft_size);
  Example e;
  e.id = std::move(id);
  e.features = signal::acoustic_features(degraded, cfg);
  e.l_nr = signal::las_of(degraded, cfg);
  e.l_c = signal::las_of(clean, cfg);
  e.l_ne = signal::las_of(noise, cfg);
  e.l_c_fine = signal::las_of(clean, StftConfig::with_fft(fine_fft_size));
  e.rir = rir;
  e.degraded = degraded;
  e.noisy = noisy;
  e.clean = clean;
  return e;
}

Example load_example(const degrade::Manifest& manifest, const degrade::CorpusEntry& entry,
                     int fft_size, int fine_fft_size) {
  const auto clean = signal::read_wav(manifest.resolve(entry.clean_path));
  const auto noise = signal::read_wav(manifest.resolve(entry.noise_path));
  const auto rir_wav = signal::read_wav(manifest.resolve(entry.rir_path));
  const auto degraded = signal::read_wav(manifest.resolve(entry.degraded_path));
  const auto noisy = signal::read_wav(manifest.resolve(entry.noisy_path));
  return make_example(entry.id, clean, noise, degrade::make_rir(rir_wav.samples),
                      degraded, noisy, fft_size, fine_fft_size);
}

std::vector<double> log_f0(const signal::AcousticFeatures& f) {
  std::vector<double> out(f.f0.size(), 0.0);
  for (std::size_t i = 0; i < f.f0.size(); ++i) {
    if (f.vuv[i] && f.f0[i] > 0.0) out[i] = std::log(f.f0[i]);
  }
  return out;
}

namespace {

struct Moments {
  std::vector<double> sum, sq;
  double count = 0.0;

  void add(const Matrix& m) {
    if (sum.empty()) {
      sum.assign(m.cols(), 0.0);
      sq.assign(m.cols(), 0.0);
    }
    if (static_cast<std::size_t>(m.cols()) != sum.size()) {
      throw ShapeError("normalization statistics: bin count " + std::to_string(m.cols()) +
                       " vs " + std::to_string(sum.size()));
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        sum[j] += m(i, j);
        sq[j] += m(i, j) * m(i, j);
      }
    }
    count += static_cast<double>(m.rows());
  }

  void finish(std::vector<double>& mean, std::vector<double>& stdev) const {
    mean.resize(sum.size());
    stdev.resize(sum.size());
    for (std::size_t j = 0; j < sum.size(); ++j) {
      mean[j] = sum[j] / count;
      const double var = std::max(sq[j] / count - mean[j] * mean[j], 0.0);
      stdev[j] = std::max(std::sqrt(var), kStdFloor);
    }
  }
};

}  // namespace

NormStats compute_norm_stats(const std::vector<Example>& examples) {
  if (examples.empty()) throw ConfigError("normalization statistics need at least one example");
  Moments mel, nr, ne, c, fine;
  double lf0_sum = 0.0, lf0_sq = 0.0, voiced = 0.0;
  for (const Example& e : examples) {
    mel.add(e.features.mel);
    nr.add(e.l_nr.values);
    ne.add(e.l_ne.values);
    c.add(e.l_c.values);
    fine.add(e.l_c_fine.values);
    for (double v : log_f0(e.features)) {
      if (v > 0.0) {
        lf0_sum += v;
        lf0_sq += v * v;
        voiced += 1.0;
      }
    }
  }
  NormStats s;
  mel.finish(s.mel_mean, s.mel_std);
  nr.finish(s.nr_mean, s.nr_std);
  ne.finish(s.ne_mean, s.ne_std);
  c.finish(s.c_mean, s.c_std);
  fine.finish(s.fine_mean, s.fine_std);
  if (voiced > 0.0) {
    s.lf0_mean = lf0_sum / voiced;
    s.lf0_std = std::max(std::sqrt(std::max(lf0_sq / voiced - s.lf0_mean * s.lf0_mean, 0.0)),
                         kStdFloor);
  }
  return s;
}

nn::NamedTensors example_tensors(const Example& e) {
  auto matrix = [](const Matrix& m) {
    nn::Tensor t({m.rows(), m.cols()});
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) t.at(i, j) = m(i, j);
    }
    return t;
  };
  auto vec = [](const std::vector<double>& v) {
    return nn::Tensor({static_cast<std::int64_t>(v.size())}, v);
  };
  std::vector<double> vuv(e.features.vuv.size());
  for (std::size_t i = 0; i < vuv.size(); ++i) vuv[i] = e.features.vuv[i] ? 1.0 : 0.0;
  return {{"f0", vec(e.features.f0)},        {"l_c", matrix(e.l_c.values)},
          {"l_c_fine", matrix(e.l_c_fine.values)}, {"l_ne", matrix(e.l_ne.values)},
          {"l_nr", matrix(e.l_nr.values)},   {"mel", matrix(e.features.mel)},
          {"rir", vec(e.rir.taps)},          {"vuv", vec(vuv)}};
}

}  // namespace dnr::model
