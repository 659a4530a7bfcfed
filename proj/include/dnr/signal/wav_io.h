// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_SIGNAL_WAV_IO_H_
#define DNR_SIGNAL_WAV_IO_H_

#include <filesystem>

#include "dnr/signal/waveform.h"

namespace dnr::signal {

enum class WavFormat { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file (PCM 16-bit or IEEE float 32). Files whose rate
// differs from `expected_rate` are rejected; there is no resampler.
Waveform read_wav(const std::filesystem::path& path,
                  int expected_rate = kDefaultSampleRate);

// PCM16 output clips to [-1, 1]. Float32 output is written as-is.
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format = WavFormat::kFloat32);

}  // namespace dnr::signal

#endif  // DNR_SIGNAL_WAV_IO_H_
