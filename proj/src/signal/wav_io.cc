// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/signal/wav_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dnr/common/error.h"

namespace dnr::signal {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, int expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError(name + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate an overstated data size only for the final data chunk.
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = bytes.data() + body;
        data_size = bytes.size() - body;
        break;
      }
      throw IoError(name + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(name + ": malformed fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible && size >= 40) {
        format = le16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr) {
    throw IoError(name + ": missing fmt or data chunk");
  }
  if (channels != 1) {
    throw ConfigError(name + ": only mono audio is supported, found " +
                      std::to_string(channels) + " channels");
  }
  if (static_cast<int>(rate) != expected_rate) {
    throw ConfigError(name + ": sample rate " + std::to_string(rate) +
                      " Hz, expected " + std::to_string(expected_rate) +
                      " Hz (resampling is not supported)");
  }

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_size / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(le16(data + 2 * i));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_size / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t u = le32(data + 4 * i);
      float f;
      std::memcpy(&f, &u, sizeof f);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw IoError(name + ": unsupported sample format (format " +
                  std::to_string(format) + ", " + std::to_string(bits) +
                  " bits); need PCM16 or float32");
  }
  validate(w, name);
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavFormat format) {
  validate(w, path.string());
  const bool is_float = format == WavFormat::kFloat32;
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(w.samples.size() * (bits / 8));

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, is_float ? kFormatFloat : kFormatPcm);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (double v : w.samples) {
    if (is_float) {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put32(out, u);
    } else {
      const double c = std::clamp(v, -1.0, 1.0);
      const auto s = static_cast<std::int16_t>(std::lround(c * 32767.0));
      put16(out, static_cast<std::uint16_t>(s));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write wav file: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace dnr::signal
