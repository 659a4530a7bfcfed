// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_DEGRADE_SOURCES_H_
#define DNR_DEGRADE_SOURCES_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "dnr/degrade/rir.h"
#include "dnr/signal/waveform.h"

namespace dnr::degrade {

// Synthetic stand-ins for recorded material, used by tests and the toy
// corpus. All generators are deterministic in their seed.

// Voiced syllables (harmonic source through formant envelopes with a
// moving F0) separated by fricative bursts and short pauses.
signal::Waveform synth_speech(std::uint64_t seed, double seconds,
                              int sample_rate = signal::kDefaultSampleRate);

enum class NoiseKind { kWhite, kPink, kBrown, kHum, kBabble };
std::string noise_kind_name(NoiseKind kind);

signal::Waveform synth_noise(NoiseKind kind, std::uint64_t seed, double seconds,
                             int sample_rate = signal::kDefaultSampleRate);

// Direct path followed by exponentially decaying noise reaching -60 dB
// after t60 seconds (truncated to kRirLength taps).
Rir synth_rir(std::uint64_t seed, double t60,
              int sample_rate = signal::kDefaultSampleRate);

struct ToySourceOptions {
  int num_clean = 10;
  int num_noise = 5;
  int num_rir = 4;
  double seconds = 1.5;
  std::uint64_t seed = 1;
};

// Writes clean/, noise/ and rir/ subdirectories of float32 WAV files.
void make_toy_sources(const std::filesystem::path& dir,
                      const ToySourceOptions& options);

}  // namespace dnr::degrade

#endif  // DNR_DEGRADE_SOURCES_H_
