// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/enhance/spectral.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/signal/fft.h"
#include "denoise_bin.h"

namespace dnr::enhance {

using signal::Las;

RirMagnitude rir_magnitude(const degrade::Rir& r) {
  degrade::validate(r);
  const auto spec = signal::rfft(r.taps, r.taps.size());
  RirMagnitude out;
  out.r_mag.resize(spec.size());
  double peak = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    out.r_mag[k] = std::abs(spec[k]);
    peak = std::max(peak, out.r_mag[k]);
  }
  const double floor = kRirFloorRatio * peak;
  for (double& v : out.r_mag) v = std::max(v, floor);
  return out;
}

Las initial_denoise_dereverb(const Las& l_nr, const RirMagnitude& rm,
                             const NoiseEstimate& ne) {
  const auto n = l_nr.values.rows(), k = l_nr.values.cols();
  if (static_cast<Eigen::Index>(rm.r_mag.size()) != k ||
      ne.noise_las.values.rows() != n || ne.noise_las.values.cols() != k) {
    throw ShapeError("initial denoise: LAS " + std::to_string(n) + "x" +
                     std::to_string(k) + ", RIR magnitude " +
                     std::to_string(rm.r_mag.size()) + ", noise LAS " +
                     std::to_string(ne.noise_las.values.rows()) + "x" +
                     std::to_string(ne.noise_las.values.cols()));
  }
  if (!std::isfinite(ne.alpha) || ne.alpha < 0.0) {
    throw NumericError("noise weight alpha must be finite and nonnegative");
  }
  if (!l_nr.values.allFinite() || !ne.noise_las.values.allFinite()) {
    throw NumericError("initial denoise: non-finite LAS input");
  }
  for (double v : rm.r_mag) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw NumericError("initial denoise: RIR magnitude must be positive");
    }
  }
  std::vector<double> log_r(rm.r_mag.size());
  for (std::size_t j = 0; j < log_r.size(); ++j) log_r[j] = std::log(rm.r_mag[j]);
  Las out{Matrix(n, k), l_nr.config};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      out.values(i, j) = internal::denoise_bin(l_nr.values(i, j), log_r[j], ne.alpha,
                                               ne.noise_las.values(i, j))
                             .value;
    }
  }
  return out;
}

std::pair<Las, Las> band_split(const Las& l, const BandLayout& layout) {
  if (l.num_bins() != layout.k_full) {
    throw ShapeError("band split expects " + std::to_string(layout.k_full) +
                     " bins, got " + std::to_string(l.num_bins()));
  }
  Las narrow{l.values.leftCols(layout.k_nb), l.config};
  Las high{l.values.rightCols(layout.high_bins()), l.config};
  return {std::move(narrow), std::move(high)};
}

Las band_merge(const Las& narrow, const Las& high, const BandLayout& layout) {
  if (narrow.num_bins() != layout.k_nb || high.num_bins() != layout.high_bins() ||
      narrow.num_frames() != high.num_frames()) {
    throw ShapeError("band merge: narrow " + std::to_string(narrow.num_frames()) +
                     "x" + std::to_string(narrow.num_bins()) + ", high " +
                     std::to_string(high.num_frames()) + "x" +
                     std::to_string(high.num_bins()));
  }
  Las out{Matrix(narrow.num_frames(), layout.k_full), narrow.config};
  out.values.leftCols(layout.k_nb) = narrow.values;
  out.values.rightCols(layout.k_full - layout.k_nb) =
      high.values.rightCols(layout.k_full - layout.k_nb);
  return out;
}

Las fre_upsample_reference(const Las& l, const BandLayout& layout) {
  if (l.num_bins() != layout.k_full) {
    throw ShapeError("FRE expects " + std::to_string(layout.k_full) +
                     " bins, got " + std::to_string(l.num_bins()));
  }
  const int fine = layout.k_fine;
  const double ratio = static_cast<double>(layout.k_full - 1) / (fine - 1);
  signal::StftConfig cfg = l.config;
  cfg.fft_size = 2 * (fine - 1);
  Las out{Matrix(l.num_frames(), fine), cfg};
  for (int j = 0; j < fine; ++j) {
    const double pos = j * ratio;
    const int i0 = std::min(static_cast<int>(pos), layout.k_full - 2);
    const double f = pos - i0;
    out.values.col(j) = (1.0 - f) * l.values.col(i0) + f * l.values.col(i0 + 1);
  }
  return out;
}

namespace {

double spectral_convergence(const ComplexMatrix& x, const Matrix& target) {
  return (x.cwiseAbs() - target).norm() / std::max(target.norm(), 1e-300);
}

}  // namespace

signal::ComplexSpectrogram griffin_lim_phase(const Las& l,
                                             const GriffinLimOptions& o,
                                             std::vector<double>* trace) {
  if (o.iters < 0) throw ConfigError("Griffin-Lim iterations must be >= 0");
  const signal::StftConfig& cfg = l.config;
  cfg.validate();
  const Matrix mag = l.values.array().exp().matrix();
  const auto n = l.values.rows(), k = l.values.cols();
  Rng rng(o.seed);
  signal::ComplexSpectrogram s{ComplexMatrix(n, k), cfg, std::nullopt};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double ph = rng.uniform(-std::numbers::pi, std::numbers::pi);
      s.frames(i, j) = std::polar(mag(i, j), ph);
    }
  }
  // Working length covering every frame completely, so the synthesis is the
  // least-squares inverse for all n frames.
  const std::size_t length =
      static_cast<std::size_t>((n - 1) * cfg.shift_samples() + cfg.frame_samples());
  for (int it = 0; it <= o.iters; ++it) {
    const signal::Waveform w = signal::istfs(s, length);
    const ComplexMatrix x = signal::stft(w, cfg).frames.topRows(n);
    if (trace) trace->push_back(spectral_convergence(x, mag));
    if (it == o.iters) break;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double a = std::abs(x(i, j));
        s.frames(i, j) = a > 0.0 ? x(i, j) * (mag(i, j) / a)
                                 : std::complex<double>(mag(i, j), 0.0);
      }
    }
  }
  return s;
}

signal::Waveform reconstruct(const Las& l, PhaseSource source,
                             const signal::Waveform* noisy,
                             const GriffinLimOptions& o) {
  if (source == PhaseSource::kGriffinLim) {
    signal::ComplexSpectrogram s = griffin_lim_phase(l, o);
    const std::size_t length =
        noisy ? noisy->size()
              : static_cast<std::size_t>(l.num_frames()) * l.config.shift_samples();
    return signal::istfs(s, length);
  }
  if (!noisy) throw ConfigError("noisy phase requested without a noisy waveform");
  signal::ComplexSpectrogram ref = signal::stft(*noisy, l.config);
  if (ref.num_frames() < l.num_frames() || ref.num_bins() != l.num_bins()) {
    throw ShapeError("phase source has " + std::to_string(ref.num_frames()) +
                     " frames x " + std::to_string(ref.num_bins()) +
                     " bins, LAS needs " + std::to_string(l.num_frames()) + " x " +
                     std::to_string(l.num_bins()));
  }
  signal::ComplexSpectrogram s{ComplexMatrix(l.num_frames(), l.num_bins()), l.config,
                               noisy->size()};
  for (int i = 0; i < l.num_frames(); ++i) {
    for (int j = 0; j < l.num_bins(); ++j) {
      const std::complex<double> c = ref.frames(i, j);
      const double a = std::abs(c);
      const std::complex<double> unit = a > 0.0 ? c / a : std::complex<double>(1.0, 0.0);
      s.frames(i, j) = std::exp(l.values(i, j)) * unit;
    }
  }
  return signal::istfs(s);
}

}  // namespace dnr::enhance
