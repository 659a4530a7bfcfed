// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/signal/features.h"
#include "dnr/signal/fft.h"
#include "dnr/signal/stft.h"
#include "dnr/signal/wav_io.h"

namespace dnr::signal {
namespace {

Waveform white_noise(std::size_t n, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = scale * rng.normal();
  return w;
}

Waveform sine(double hz, double seconds, double amp = 1.0) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * w.sample_rate);
  w.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    w.samples[t] = amp * std::sin(2.0 * std::numbers::pi * hz * t / w.sample_rate);
  }
  return w;
}

double interior_max_error(const Waveform& a, const Waveform& b, int margin) {
  double err = 0.0;
  for (std::size_t i = margin; i + margin < a.size(); ++i) {
    err = std::max(err, std::abs(a.samples[i] - b.samples[i]));
  }
  return err;
}

// Independent O(n^2) DFT.
std::vector<Complex> naive_rdft(const std::vector<double>& x, std::size_t n) {
  std::vector<Complex> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < x.size() && t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) / n;
      acc += x[t] * Complex(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(3);
  std::vector<double> x(50);
  for (double& v : x) v = rng.normal();
  const auto fast = rfft(x, 64);
  const auto slow = naive_rdft(x, 64);
  for (std::size_t k = 0; k < fast.size(); ++k) {
    EXPECT_NEAR(std::abs(fast[k] - slow[k]), 0.0, 1e-10);
  }
  const auto back = irfft(fast, 64);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(back[t], x[t], 1e-12);
}

TEST(Fft, HalfSpectrumSynthesisIsRfftAdjoint) {
  // <rfft(x), c> (real inner product over re/im) == <x, synth(c)>
  Rng rng(5);
  const std::size_t n = 32;
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  std::vector<Complex> c(n / 2 + 1);
  for (auto& v : c) v = Complex(rng.normal(), rng.normal());
  const auto X = rfft(x, n);
  double lhs = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    lhs += X[k].real() * c[k].real() + X[k].imag() * c[k].imag();
  }
  const auto y = half_spectrum_synthesis(c, n);
  double rhs = 0.0;
  for (std::size_t t = 0; t < n; ++t) rhs += x[t] * y[t];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Fft, ConvolutionAndCorrelationMatchDirectSums) {
  Rng rng(7);
  std::vector<double> x(300), h(37), g(300);
  for (double& v : x) v = rng.normal();
  for (double& v : h) v = rng.normal();
  for (double& v : g) v = rng.normal();
  const auto y = convolve_truncated(x, h);
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size() && j <= t; ++j) acc += h[j] * x[t - j];
    EXPECT_NEAR(y[t], acc, 1e-9);
  }
  const auto c = correlate_truncated(g, x, h.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    double acc = 0.0;
    for (std::size_t s = 0; s + j < g.size(); ++s) acc += x[s] * g[s + j];
    EXPECT_NEAR(c[j], acc, 1e-9);
  }
}

TEST(Stft, ZeroSignalGivesZeroFrames) {
  Waveform w;
  w.samples.assign(24000, 0.0);
  const auto s = stft(w, {});
  EXPECT_EQ(s.num_frames(), num_frames(24000, {}));
  EXPECT_EQ(s.num_bins(), 1025);
  EXPECT_EQ(s.frames.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, SinusoidPeaksAtNearestBin) {
  const auto s = stft(sine(1000.0, 0.5), {});
  for (int n = 4; n < s.num_frames() - 5; ++n) {
    Eigen::Index k;
    s.frames.row(n).cwiseAbs().maxCoeff(&k);
    EXPECT_EQ(k, 85);
  }
}

TEST(Stft, FrameCountAndErrors) {
  StftConfig cfg;
  EXPECT_EQ(cfg.frame_samples(), 1200);
  EXPECT_EQ(cfg.shift_samples(), 288);
  EXPECT_EQ(num_frames(288, cfg), 1);
  EXPECT_EQ(num_frames(289, cfg), 2);
  Waveform empty;
  EXPECT_THROW(stft(empty, cfg), ShapeError);
  StftConfig small = cfg;
  small.fft_size = 1024;
  EXPECT_THROW(stft(white_noise(2000, 1), small), ConfigError);
}

TEST(Stft, RoundTripRecoversInterior) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Waveform w = white_noise(12000, seed);
    const Waveform back = istfs(stft(w, {}));
    ASSERT_EQ(back.size(), w.size());
    EXPECT_LT(interior_max_error(w, back, 1200), 1e-6);
  }
}

TEST(Stft, RoundTripAtFineResolution) {
  const Waveform w = white_noise(9000, 11);
  const Waveform back = istfs(stft(w, StftConfig::with_fft(8192)));
  EXPECT_LT(interior_max_error(w, back, 1200), 1e-6);
}

TEST(Istfs, ZeroSpectrogramAndDc) {
  ComplexSpectrogram z;
  z.frames = ComplexMatrix::Zero(20, 1025);
  const Waveform out = istfs(z);
  EXPECT_EQ(peak_abs(out.samples), 0.0);

  Waveform dc;
  dc.samples.assign(10000, 0.25);
  const Waveform back = istfs(stft(dc, {}));
  for (std::size_t i = 1200; i + 1200 < back.size(); ++i) {
    EXPECT_NEAR(back.samples[i], 0.25, 1e-9);
  }
}

TEST(Istfs, RejectsDegenerateConfig) {
  ComplexSpectrogram s;
  s.config.frame_shift_ms = 60.0;  // 1440 > 1200 samples
  s.frames = ComplexMatrix::Zero(3, 1025);
  EXPECT_THROW(istfs(s), ConfigError);
  s.config.frame_shift_ms = 50.0;  // Hann window is zero at the frame start
  EXPECT_THROW(istfs(s), ConfigError);
}

TEST(Stft, ParsevalPerFrame) {
  const Waveform w = white_noise(4000, 21);
  const StftConfig cfg;
  const auto s = stft(w, cfg);
  const auto win = make_window(cfg.window, cfg.frame_samples());
  for (int n = 0; n < 5; ++n) {
    double time_energy = 0.0;
    for (int t = 0; t < cfg.frame_samples(); ++t) {
      const std::size_t i = static_cast<std::size_t>(n) * cfg.shift_samples() + t;
      const double v = i < w.size() ? w.samples[i] * win[t] : 0.0;
      time_energy += v * v;
    }
    double spec_energy = std::norm(s.frames(n, 0)) + std::norm(s.frames(n, 1024));
    for (int k = 1; k < 1024; ++k) spec_energy += 2.0 * std::norm(s.frames(n, k));
    EXPECT_NEAR(spec_energy / (cfg.fft_size * time_energy), 1.0, 1e-6);
  }
}

TEST(Las, FloorAndLogRules) {
  ComplexSpectrogram s;
  s.frames.resize(2, 1025);
  s.frames.row(0).setConstant(Complex(0.0, 1.0));
  s.frames.row(1).setZero();
  Las l = las_of(s);
  EXPECT_EQ(l.values.row(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(l.values(1, 7), std::log(kAmpFloor));
  s.frames.setConstant(Complex(std::exp(1.0), 0.0));
  l = las_of(s);
  EXPECT_NEAR(l.values.maxCoeff(), 1.0, 1e-15);
  EXPECT_NEAR(l.values.minCoeff(), 1.0, 1e-15);
}

TEST(Las, MonotoneAndPhaseInvariant) {
  ComplexSpectrogram s;
  s.frames.resize(1, 1025);
  Rng rng(2);
  for (int k = 0; k < 1025; ++k) {
    s.frames(0, k) = std::polar(0.01 * k, rng.uniform(0, 6.28));
  }
  const Las a = las_of(s);
  for (int k = 0; k < 1025; ++k) s.frames(0, k) *= std::polar(1.0, 0.7 * k);
  const Las b = las_of(s);
  for (int k = 1; k < 1025; ++k) {
    EXPECT_NEAR(a.values(0, k), b.values(0, k), 1e-12);
    EXPECT_GT(a.values(0, k), a.values(0, k - 1) - 1e-12);
  }
}

TEST(Stft, Deterministic) {
  const Waveform w = white_noise(5000, 9);
  const auto a = stft(w, {});
  const auto b = stft(w, {});
  EXPECT_TRUE(a.frames == b.frames);
}

TEST(Mel, ZeroSpectrogramGivesFloor) {
  ComplexSpectrogram s;
  s.frames = ComplexMatrix::Zero(3, 1025);
  const Matrix mel = mel_features(s);
  EXPECT_EQ(mel.cols(), 80);
  EXPECT_DOUBLE_EQ(mel.maxCoeff(), std::log(kEnergyFloor));
}

TEST(Mel, ContiguousSupportAndHalfOverlap) {
  const MelFilterbank fb(24000, 2048);
  ASSERT_EQ(fb.num_filters(), 80);
  const double mel_step = MelFilterbank::hz_to_mel(12000.0) / 81.0;
  for (int j = 0; j < fb.num_filters(); ++j) {
    const auto [first, last] = fb.support(j);
    for (int k = first; k < last; ++k) EXPECT_GT(fb.weights()(j, k), 0.0);
    EXPECT_NEAR(fb.weights().row(j).sum(), 1.0, 1e-12);
    // Each filter spans two mel steps and starts one step after its
    // predecessor: adjacent filters share half of their mel support.
    const double bin_hz = 24000.0 / 2048.0;
    const double lo = MelFilterbank::hz_to_mel((first - 1) * bin_hz);
    const double hi = MelFilterbank::hz_to_mel(last * bin_hz);
    EXPECT_LE(lo, (j + 0) * mel_step + 1e-9);
    EXPECT_GE(hi, (j + 2) * mel_step - 1e-9);
  }
  ComplexSpectrogram s;
  s.frames = ComplexMatrix::Zero(1, 1024);
  EXPECT_THROW(mel_features(s, fb), ShapeError);
}

TEST(Mel, WhiteNoiseIsFlat) {
  const Waveform w = white_noise(24000 * 10, 31);
  const Matrix mel = mel_features(stft(w, {}));
  Eigen::VectorXd mean_power = mel.array().exp().colwise().mean();
  const double spread_db =
      10.0 * std::log10(mean_power.maxCoeff() / mean_power.minCoeff());
  EXPECT_LT(spread_db, 6.0);
}

TEST(Pitch, SawtoothAt100Hz) {
  Waveform w;
  w.samples.resize(24000);
  for (std::size_t t = 0; t < w.size(); ++t) {
    const double phase = std::fmod(100.0 * t / 24000.0, 1.0);
    w.samples[t] = 2.0 * phase - 1.0;
  }
  const PitchTrack p = extract_f0(w);
  ASSERT_EQ(p.f0.size(), static_cast<std::size_t>(num_frames(w.size(), {})));
  for (std::size_t n = 0; n < p.f0.size(); ++n) {
    EXPECT_TRUE(p.vuv[n]) << n;
    EXPECT_NEAR(p.f0[n], 100.0, 2.0) << n;
  }
}

TEST(Pitch, NoiseMostlyUnvoicedAndSilenceUnvoiced) {
  const PitchTrack p = extract_f0(white_noise(24000, 4));
  int unvoiced = 0;
  for (bool v : p.vuv) unvoiced += v ? 0 : 1;
  EXPECT_GE(unvoiced, static_cast<int>(0.9 * p.vuv.size()));

  Waveform silence;
  silence.samples.assign(12000, 0.0);
  const PitchTrack q = extract_f0(silence);
  for (std::size_t n = 0; n < q.f0.size(); ++n) {
    EXPECT_FALSE(q.vuv[n]);
    EXPECT_EQ(q.f0[n], 0.0);
  }
}

TEST(Features, VoicingImpliesZeroF0) {
  Waveform w = sine(150.0, 0.6, 0.4);
  w.samples.resize(24000, 0.0);
  const AcousticFeatures f = acoustic_features(w);
  EXPECT_EQ(f.mel.rows(), static_cast<Eigen::Index>(f.f0.size()));
  for (std::size_t n = 0; n < f.f0.size(); ++n) {
    if (!f.vuv[n]) {
      EXPECT_EQ(f.f0[n], 0.0);
    }
    EXPECT_GE(f.f0[n], 0.0);
  }
  EXPECT_TRUE(f.vuv[10]);
  EXPECT_NEAR(f.f0[10], 150.0, 2.0);
}

class WavIoTest : public ::testing::Test {
 protected:
  std::filesystem::path dir_ =
      std::filesystem::temp_directory_path() / "dnr_wav_io_test";
  void SetUp() override { std::filesystem::create_directories(dir_); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
};

TEST_F(WavIoTest, FloatRoundTripIsExactForFloatValues) {
  Waveform w = white_noise(1000, 8);
  for (double& v : w.samples) v = static_cast<float>(v);
  write_wav(dir_ / "a.wav", w);
  const Waveform r = read_wav(dir_ / "a.wav");
  EXPECT_EQ(r.samples, w.samples);
}

TEST_F(WavIoTest, Pcm16QuantizesWithinOneStep) {
  const Waveform w = white_noise(1000, 8, 0.2);
  write_wav(dir_ / "b.wav", w, WavFormat::kPcm16);
  const Waveform r = read_wav(dir_ / "b.wav");
  ASSERT_EQ(r.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 16000.0);
  }
}

TEST_F(WavIoTest, RejectsOtherRatesAndGarbage) {
  Waveform w = white_noise(100, 1);
  w.sample_rate = 16000;
  write_wav(dir_ / "c.wav", w);
  EXPECT_THROW(read_wav(dir_ / "c.wav"), ConfigError);
  EXPECT_NO_THROW(read_wav(dir_ / "c.wav", 16000));
  {
    std::ofstream f(dir_ / "d.wav", std::ios::binary);
    f << "not a wav file at all";
  }
  EXPECT_THROW(read_wav(dir_ / "d.wav"), IoError);
  EXPECT_THROW(read_wav(dir_ / "missing.wav"), IoError);
}

}  // namespace
}  // namespace dnr::signal
