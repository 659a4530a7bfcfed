// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/degrade/corpus.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/degrade/mix.h"
#include "dnr/degrade/rir.h"
#include "dnr/signal/wav_io.h"

namespace dnr::degrade {
namespace fs = std::filesystem;
using nlohmann::json;

std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

std::string to_json_line(const CorpusEntry& e) {
  // Keys in a fixed order for byte-stable manifests.
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["clean_path"] = e.clean_path;
  j["noise_path"] = e.noise_path;
  j["rir_path"] = e.rir_path;
  j["degraded_path"] = e.degraded_path;
  j["noisy_path"] = e.noisy_path;
  j["snr_db"] = e.snr_db;
  j["room_label"] = e.room_label;
  j["split"] = split_name(e.split);
  j["gain"] = e.gain;
  j["noise_label"] = e.noise_label;
  return j.dump();
}

CorpusEntry parse_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw IoError(std::string("malformed manifest line: ") + ex.what());
  }
  CorpusEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.clean_path = j.at("clean_path").get<std::string>();
    e.noise_path = j.at("noise_path").get<std::string>();
    e.rir_path = j.at("rir_path").get<std::string>();
    e.degraded_path = j.at("degraded_path").get<std::string>();
    e.noisy_path = j.at("noisy_path").get<std::string>();
    e.snr_db = j.at("snr_db").get<double>();
    e.room_label = j.at("room_label").get<std::string>();
    e.split = parse_split(j.at("split").get<std::string>());
    e.gain = j.value("gain", 1.0);
    e.noise_label = j.value("noise_label", std::string());
  } catch (const json::exception& ex) {
    throw IoError(std::string("manifest entry missing field: ") + ex.what());
  }
  if (!std::isfinite(e.snr_db)) throw IoError("manifest entry " + e.id + " has non-finite snr_db");
  return e;
}

std::vector<CorpusEntry> Manifest::split(Split s) const {
  std::vector<CorpusEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  std::vector<CorpusEntry> sorted = m.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.id < b.id; });
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + tmp.string());
    for (const auto& e : sorted) out << to_json_line(e) << '\n';
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      m.entries.push_back(parse_json_line(line));
    } catch (const IoError& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

std::vector<std::string> missing_files(const Manifest& m) {
  std::vector<std::string> missing;
  for (const auto& e : m.entries) {
    for (const std::string* p : {&e.clean_path, &e.noise_path, &e.rir_path,
                                 &e.degraded_path, &e.noisy_path}) {
      if (!fs::exists(m.resolve(*p))) missing.push_back(m.resolve(*p).string());
    }
  }
  return missing;
}

void validate_manifest(const Manifest& m) {
  const auto missing = missing_files(m);
  if (missing.empty()) return;
  std::string msg = std::to_string(missing.size()) + " manifest files missing:";
  for (const auto& p : missing) msg += "\n  " + p;
  throw IoError(msg);
}

SplitSpec parse_split_spec(const std::string& text) {
  SplitSpec s;
  char a, b;
  std::istringstream is(text);
  if (!(is >> s.train >> a >> s.valid >> b >> s.test) || a != '/' || b != '/' ||
      !(is >> std::ws).eof() || s.train < 0 || s.valid < 0 || s.test < 0 ||
      s.train + s.valid + s.test == 0) {
    throw ConfigError("split spec must look like 8/1/1, got '" + text + "'");
  }
  return s;
}

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad SNR value '" + item + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty SNR list");
  return out;
}

namespace {

std::vector<fs::path> wav_files(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) {
    throw IoError(std::string(what) + " directory not found: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError(std::string(what) + " pool is empty: " + dir.string());
  return out;
}

// Pools are split so that test conditions are unseen in train/valid whenever a
// pool has at least two members; the last quarter (at least one) goes to test.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_pool(const std::vector<T>& pool,
                                                     bool has_test) {
  if (!has_test || pool.size() < 2) return {pool, pool};
  const std::size_t n_test = std::max<std::size_t>(1, pool.size() / 4);
  std::vector<T> seen(pool.begin(), pool.end() - n_test);
  std::vector<T> unseen(pool.end() - n_test, pool.end());
  return {seen, unseen};
}

struct Assignment {
  fs::path clean, noise, rir;
  double snr;
  Split split;
};

void scale(std::vector<double>& x, double g) {
  for (double& v : x) v *= g;
}

CorpusEntry render(const Assignment& a, std::size_t index, std::uint64_t seed,
                   const fs::path& out) {
  Rng rng(derive_seed(seed, 0x5eed0000ULL + index));
  const signal::Waveform clean = signal::read_wav(a.clean);
  const signal::Waveform noise = signal::read_wav(a.noise);
  const signal::Waveform rir_wav = signal::read_wav(a.rir);
  const Rir rir = make_rir(rir_wav.samples, rir_wav.sample_rate);

  const signal::Waveform reverberant = convolve_rir(clean, rir);
  const std::size_t offset = rng.below(noise.size());
  Mixture mix = mix_at_snr(reverberant, noise, a.snr, offset);
  signal::Waveform degraded = mix.mixed;
  signal::Waveform noise_part = mix.scaled_noise;
  signal::Waveform clean_out = clean;
  signal::Waveform noisy = clean;
  for (std::size_t t = 0; t < noisy.size(); ++t) noisy.samples[t] += noise_part.samples[t];

  double peak = 0.0;
  for (const auto* w : {&degraded, &noisy, &clean_out, &noise_part}) {
    peak = std::max(peak, signal::peak_abs(w->samples));
  }
  double gain = 1.0;
  if (peak > 1.0) {
    gain = 1.0 / peak;
    for (auto* w : {&degraded, &noisy, &clean_out, &noise_part}) scale(w->samples, gain);
  }

  CorpusEntry e;
  e.id = a.clean.stem().string();
  e.clean_path = "clean/" + e.id + ".wav";
  e.noise_path = "noise/" + e.id + ".wav";
  e.rir_path = "rir/" + e.id + ".wav";
  e.degraded_path = "degraded/" + e.id + ".wav";
  e.noisy_path = "noisy/" + e.id + ".wav";
  e.snr_db = a.snr;
  e.room_label = a.rir.stem().string();
  e.split = a.split;
  e.gain = gain;
  e.noise_label = a.noise.stem().string();
  signal::write_wav(out / e.clean_path, clean_out);
  signal::write_wav(out / e.noise_path, noise_part);
  signal::write_wav(out / e.rir_path, {rir.taps, rir.sample_rate});
  signal::write_wav(out / e.degraded_path, degraded);
  signal::write_wav(out / e.noisy_path, noisy);
  return e;
}

}  // namespace

Manifest synthesize_corpus(const CorpusOptions& o) {
  const auto cleans = wav_files(o.clean_dir, "clean");
  const auto noises = wav_files(o.noise_dir, "noise");
  const auto rirs = wav_files(o.rir_dir, "RIR");
  if (o.snr_list.empty()) throw ConfigError("empty SNR list");

  // Seeded split assignment over the sorted clean ids.
  const std::size_t n = cleans.size();
  const double total = o.splits.train + o.splits.valid + o.splits.test;
  std::size_t n_test = static_cast<std::size_t>(std::lround(n * o.splits.test / total));
  std::size_t n_valid = static_cast<std::size_t>(std::lround(n * o.splits.valid / total));
  if (n_test + n_valid > n) n_valid = n - n_test;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(derive_seed(o.seed, 0x5911));
  split_rng.shuffle(order);
  std::vector<Split> split_of(n, Split::kTrain);
  for (std::size_t i = 0; i < n_test; ++i) split_of[order[i]] = Split::kTest;
  for (std::size_t i = n_test; i < n_test + n_valid; ++i) split_of[order[i]] = Split::kValid;

  const bool has_test = n_test > 0;
  const auto [noise_seen, noise_unseen] = split_pool(noises, has_test);
  const auto [rir_seen, rir_unseen] = split_pool(rirs, has_test);
  const auto [snr_seen, snr_unseen] = split_pool(o.snr_list, has_test);

  std::vector<Assignment> plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(o.seed, i));
    const bool test = split_of[i] == Split::kTest;
    const auto& np = test ? noise_unseen : noise_seen;
    const auto& rp = test ? rir_unseen : rir_seen;
    const auto& sp = test ? snr_unseen : snr_seen;
    plan[i].clean = cleans[i];
    plan[i].noise = np[rng.below(np.size())];
    plan[i].rir = rp[rng.below(rp.size())];
    plan[i].snr = sp[rng.below(sp.size())];
    plan[i].split = split_of[i];
  }

  for (const char* sub : {"clean", "noise", "rir", "degraded", "noisy"}) {
    std::error_code ec;
    fs::create_directories(o.out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (o.out_dir / sub).string() + ": " + ec.message());
  }

  Manifest m;
  m.base_dir = o.out_dir;
  m.entries.resize(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        m.entries[i] = render(plan[i], i, o.seed, o.out_dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(n)));
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(m.entries.begin(), m.entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.id < b.id; });
  write_manifest(o.out_dir / "manifest.jsonl", m);
  return m;
}

}  // namespace dnr::degrade
