// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_SIGNAL_FEATURES_H_
#define DNR_SIGNAL_FEATURES_H_

#include <vector>

#include "dnr/common/matrix.h"
#include "dnr/signal/stft.h"

namespace dnr::signal {

inline constexpr int kNumMel = 80;
inline constexpr double kEnergyFloor = kAmpFloor * kAmpFloor;

// Triangular filters on the HTK mel scale. Every row sums to one so a flat
// power spectrum maps to equal channel energies.
class MelFilterbank {
 public:
  MelFilterbank(int sample_rate, int fft_size, int num_filters = kNumMel,
                double low_hz = 0.0, double high_hz = -1.0);

  int num_filters() const { return static_cast<int>(weights_.rows()); }
  int num_bins() const { return static_cast<int>(weights_.cols()); }
  const Matrix& weights() const { return weights_; }
  // First and one-past-last nonzero bin of filter j.
  std::pair<int, int> support(int j) const { return support_[j]; }

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  Matrix weights_;  // num_filters x bins
  std::vector<std::pair<int, int>> support_;
};

// mel[n, j] = ln(max(sum_k filter_j[k] |s[n, k]|^2, kEnergyFloor)).
Matrix mel_features(const ComplexSpectrogram& s);
Matrix mel_features(const ComplexSpectrogram& s, const MelFilterbank& fb);

struct PitchTrack {
  std::vector<double> f0;  // Hz, 0 when unvoiced
  std::vector<bool> vuv;
};

struct PitchOptions {
  double min_hz = 60.0;
  double max_hz = 400.0;
  double voicing_threshold = 0.3;
};

// Normalized-autocorrelation pitch tracker on the STFT frame grid.
PitchTrack extract_f0(const Waveform& w, const StftConfig& cfg = {},
                      const PitchOptions& opts = {});

struct AcousticFeatures {
  Matrix mel;  // N x 80
  std::vector<double> f0;
  std::vector<bool> vuv;

  int num_frames() const { return static_cast<int>(mel.rows()); }
};

// Mel from the 2048-point analysis of `cfg` plus the pitch track.
AcousticFeatures acoustic_features(const Waveform& w, const StftConfig& cfg = {});

}  // namespace dnr::signal

#endif  // DNR_SIGNAL_FEATURES_H_
