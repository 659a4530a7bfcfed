// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <set>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/degrade/corpus.h"
#include "dnr/degrade/mix.h"
#include "dnr/degrade/sources.h"
#include "dnr/metrics/metrics.h"
#include "dnr/metrics/report.h"
#include "dnr/signal/wav_io.h"

namespace dnr::metrics {
namespace {

namespace fs = std::filesystem;

signal::Waveform white(std::size_t n, std::uint64_t seed, double amp = 0.3) {
  Rng rng(seed);
  signal::Waveform w{std::vector<double>(n), 24000};
  for (double& v : w.samples) v = amp * rng.normal();
  return w;
}

signal::Waveform scaled(const signal::Waveform& w, double g) {
  signal::Waveform out = w;
  for (double& v : out.samples) v *= g;
  return out;
}

TEST(Resample, PreservesInBandSine) {
  const int n = 24000;
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) x[t] = std::sin(2.0 * std::numbers::pi * 1000.0 * t / 24000.0);
  const auto y = resample(x, 10000, 24000);
  ASSERT_EQ(y.size(), 10000u);
  for (int m = 500; m < 9500; ++m) {
    ASSERT_NEAR(y[m], std::sin(2.0 * std::numbers::pi * 1000.0 * m / 10000.0), 2e-3) << m;
  }
}

TEST(Resample, IdentityRatioIsExact) {
  const std::vector<double> x = {1.0, -2.0, 3.0};
  EXPECT_EQ(resample(x, 3, 3), x);
}

TEST(Stoi, SelfIsOne) {
  const auto s = degrade::synth_speech(1, 2.0);
  EXPECT_NEAR(stoi(s, s), 1.0, 1e-9);
}

TEST(Stoi, GainInvariant) {
  const auto s = degrade::synth_speech(2, 2.0);
  EXPECT_NEAR(stoi(s, scaled(s, 0.5)), 1.0, 1e-6);
  EXPECT_NEAR(stoi(scaled(s, 3.0), s), 1.0, 1e-6);
}

TEST(Stoi, WhiteNoiseScoresLow) {
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto s = degrade::synth_speech(seed, 2.0);
    const double v = stoi(s, white(s.size(), seed + 100));
    EXPECT_LT(v, 0.35) << seed;
    mean += v / 8.0;
  }
  EXPECT_LT(mean, 0.3);
}

// Reference values from pystoi 0.4.1 on the same float32 wav pair.
TEST(Stoi, MatchesReferenceImplementation) {
  const auto s = degrade::synth_speech(3, 2.0);
  const auto n = white(s.size(), 4);
  const auto q = [](signal::Waveform w) {
    for (double& v : w.samples) v = static_cast<float>(v);
    return w;
  };
  EXPECT_NEAR(stoi(q(s), q(n)), 0.3112293, 2e-5);
  EXPECT_NEAR(stoi(q(s), q(degrade::mix_at_snr(s, n, 0.0).mixed)), 0.6712933, 2e-5);
}

TEST(Stoi, DecreasesWithNoise) {
  const auto s = degrade::synth_speech(5, 2.0);
  const auto n = white(s.size(), 6);
  double previous = 1.0;
  for (double snr : {20.0, 5.0, -5.0}) {
    const double v = stoi(s, degrade::mix_at_snr(s, n, snr).mixed);
    EXPECT_LT(v, previous) << snr;
    previous = v;
  }
}

TEST(Stoi, ShortClipThrows) {
  const auto s = degrade::synth_speech(7, 0.2);
  EXPECT_THROW(stoi(s, s), ShapeError);
  EXPECT_THROW(stoi(s, white(100, 1)), ShapeError);
}

TEST(Lsd, IdentityAndUniformGain) {
  const auto w = white(12000, 8);
  EXPECT_NEAR(log_spectral_distance(w, w), 0.0, 1e-12);
  EXPECT_NEAR(log_spectral_distance(w, scaled(w, 2.0)), 20.0 * std::log10(2.0), 1e-9);
}

TEST(Lsd, MatchesDirectDftOracle) {
  const auto a = white(2400, 9), b = white(2400, 10);
  const int frame = 1200, shift = 288, fft = 2048, bins = 1025;
  const int frames = (2400 + shift - 1) / shift;
  double acc = 0.0;
  for (int n = 0; n < frames; ++n) {
    for (int k = 0; k < bins; ++k) {
      std::complex<double> xa = 0.0, xb = 0.0;
      for (int t = 0; t < frame; ++t) {
        const int i = n * shift + t;
        if (i >= 2400) break;
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / frame);
        const auto e = std::polar(1.0, -2.0 * std::numbers::pi * k * t / fft);
        xa += w * a.samples[i] * e;
        xb += w * b.samples[i] * e;
      }
      const double d = 20.0 * std::log10(std::max(std::abs(xa), 1e-5)) -
                       20.0 * std::log10(std::max(std::abs(xb), 1e-5));
      acc += d * d;
    }
  }
  EXPECT_NEAR(log_spectral_distance(a, b), std::sqrt(acc / (frames * bins)), 1e-9);
}

TEST(Lsd, LengthMismatchThrows) {
  EXPECT_THROW(log_spectral_distance(white(1000, 1), white(1001, 2)), ShapeError);
}

TEST(SegSnr, IdentityHitsUpperClamp) {
  const auto s = degrade::synth_speech(11, 1.0);
  EXPECT_EQ(segmental_snr(s, s), kSegSnrMax);
}

TEST(SegSnr, ZeroDbPerSegmentConstruction) {
  const auto c = white(7200, 12);
  const auto n = white(7200, 13);
  signal::Waveform p = c;
  for (int s = 0; s < 10; ++s) {
    double ec = 0.0, en = 0.0;
    for (int t = s * 720; t < (s + 1) * 720; ++t) {
      ec += c.samples[t] * c.samples[t];
      en += n.samples[t] * n.samples[t];
    }
    const double g = std::sqrt(ec / en);
    for (int t = s * 720; t < (s + 1) * 720; ++t) p.samples[t] += g * n.samples[t];
  }
  EXPECT_NEAR(segmental_snr(c, p), 0.0, 1e-9);
}

TEST(SegSnr, ClampRespected) {
  const auto c = white(7200, 14, 1e-4);
  const auto loud = white(7200, 15, 10.0);
  EXPECT_EQ(segmental_snr(c, loud), kSegSnrMin);
  signal::Waveform zero{std::vector<double>(7200, 0.0), 24000};
  EXPECT_EQ(segmental_snr(zero, loud), kSegSnrMin);
  EXPECT_THROW(segmental_snr(white(100, 1), white(100, 2)), ShapeError);
}

class ReportTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "dnr_metrics_test";
    fs::remove_all(root_);
    degrade::ToySourceOptions src;
    src.num_clean = 6;
    src.num_noise = 2;
    src.num_rir = 2;
    src.seconds = 1.2;
    degrade::make_toy_sources(root_ / "src", src);
    degrade::CorpusOptions o;
    o.clean_dir = root_ / "src/clean";
    o.noise_dir = root_ / "src/noise";
    o.rir_dir = root_ / "src/rir";
    o.out_dir = root_ / "corpus";
    o.snr_list = {0.0, 10.0};
    manifest_ = new degrade::Manifest(degrade::synthesize_corpus(o));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    fs::remove_all(root_);
  }

  static fs::path copy_split(const std::string& name, bool degraded) {
    const fs::path dir = root_ / name;
    fs::create_directories(dir);
    for (const auto& e : manifest_->entries) {
      fs::copy_file(manifest_->resolve(degraded ? e.degraded_path : e.clean_path),
                    dir / (e.id + ".wav"), fs::copy_options::overwrite_existing);
    }
    return dir;
  }

  static fs::path root_;
  static degrade::Manifest* manifest_;
};

fs::path ReportTest::root_;
degrade::Manifest* ReportTest::manifest_ = nullptr;

TEST_F(ReportTest, CleanCopiesScorePerfectAndBeatDegraded) {
  EvaluateOptions all;
  all.split.reset();
  all.jobs = 2;
  const MetricReport clean = evaluate_manifest(*manifest_, copy_split("clean", false), all);
  const MetricReport degraded = evaluate_manifest(*manifest_, copy_split("degraded", true), all);
  EXPECT_NEAR(clean.overall.stoi, 1.0, 1e-9);
  EXPECT_EQ(clean.overall.count, static_cast<int>(manifest_->entries.size()));
  EXPECT_LT(degraded.overall.stoi, clean.overall.stoi);
  const MetricReport direct = evaluate_degraded(*manifest_, all);
  EXPECT_EQ(report_csv(direct), report_csv(degraded));
}

TEST_F(ReportTest, GroupsCoverDistinctConditions) {
  EvaluateOptions all;
  all.split.reset();
  const MetricReport r = evaluate_manifest(*manifest_, copy_split("clean", false), all);
  std::set<std::pair<double, std::string>> expected, got;
  for (const auto& e : manifest_->entries) expected.insert({e.snr_db, e.room_label});
  int total = 0;
  for (const auto& g : r.groups) {
    got.insert({g.snr_db, g.room_label});
    total += g.means.count;
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(total, r.overall.count);
}

TEST_F(ReportTest, MissingFilesListedExhaustively) {
  const fs::path dir = copy_split("partial", false);
  EvaluateOptions all;
  all.split.reset();
  const auto& entries = manifest_->entries;
  fs::remove(dir / (entries[0].id + ".wav"));
  fs::remove(dir / (entries[2].id + ".wav"));
  try {
    evaluate_manifest(*manifest_, dir, all);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(entries[0].id), std::string::npos);
    EXPECT_NE(msg.find(entries[2].id), std::string::npos);
    EXPECT_NE(msg.find("2 missing"), std::string::npos);
  }
}

TEST_F(ReportTest, CsvAndJsonOutputs) {
  EvaluateOptions all;
  all.split.reset();
  const MetricReport r = evaluate_manifest(*manifest_, copy_split("clean", false), all);
  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,snr_db,room_label,stoi,lsd_db,segsnr_db");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
            static_cast<long>(manifest_->entries.size()) + 1);
  const fs::path stem = root_ / "report";
  write_report(stem, r);
  EXPECT_TRUE(fs::exists(root_ / "report.csv"));
  EXPECT_TRUE(fs::exists(root_ / "report.json"));
  EXPECT_NE(report_json(r).find("\"overall\""), std::string::npos);
}

TEST_F(ReportTest, DefaultEvaluatesTestSplitOnly) {
  const MetricReport r = evaluate_manifest(*manifest_, copy_split("clean", false));
  EXPECT_EQ(r.overall.count, static_cast<int>(manifest_->split(degrade::Split::kTest).size()));
}

}  // namespace
}  // namespace dnr::metrics
