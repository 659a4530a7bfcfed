// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_EXAMPLE_H_
#define DNR_MODEL_EXAMPLE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "dnr/degrade/corpus.h"
#include "dnr/degrade/rir.h"
#include "dnr/nn/param_store.h"
#include "dnr/signal/features.h"
#include "dnr/signal/stft.h"

namespace dnr::model {

// Everything one utterance contributes to training or enhancement. All LAS
// share the frame grid of the degraded signal.
struct Example {
  std::string id;
  signal::AcousticFeatures features;  // of the degraded signal
  signal::Las l_nr;                   // degraded
  signal::Las l_c;                    // clean
  signal::Las l_ne;                   // noise
  signal::Las l_c_fine;               // clean at the fine resolution
  degrade::Rir rir;
  signal::Waveform degraded;
  signal::Waveform noisy;  // clean + noise, no reverberation
  signal::Waveform clean;

  int num_frames() const { return l_nr.num_frames(); }
};

// Degraded-side inputs only; what enhancement needs.
struct Inputs {
  signal::AcousticFeatures features;
  signal::Waveform degraded;
};

Inputs make_inputs(const signal::Waveform& degraded, int fft_size = 2048);

Example make_example(std::string id, const signal::Waveform& clean,
                     const signal::Waveform& noise, const degrade::Rir& rir,
                     const signal::Waveform& degraded, const signal::Waveform& noisy,
                     int fft_size = 2048, int fine_fft_size = 8192);

Example load_example(const degrade::Manifest& manifest, const degrade::CorpusEntry& entry,
                     int fft_size = 2048, int fine_fft_size = 8192);

// Per-feature input statistics and per-bin LAS statistics, stored as
// non-trainable entries under "norm/".
struct NormStats {
  std::vector<double> mel_mean, mel_std;
  double lf0_mean = 0.0, lf0_std = 1.0;
  std::vector<double> nr_mean, nr_std;
  std::vector<double> ne_mean, ne_std;
  std::vector<double> c_mean, c_std;
  std::vector<double> fine_mean, fine_std;
};

inline constexpr double kStdFloor = 1e-3;

NormStats compute_norm_stats(const std::vector<Example>& examples);
// Log F0 where voiced, 0 otherwise.
std::vector<double> log_f0(const signal::AcousticFeatures& f);

// Named tensors for inspection or caching (float32 on disk).
nn::NamedTensors example_tensors(const Example& e);

}  // namespace dnr::model

#endif  // DNR_MODEL_EXAMPLE_H_
