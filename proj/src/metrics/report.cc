// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/metrics/report.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dnr/common/error.h"
#include "dnr/metrics/metrics.h"
#include "dnr/signal/wav_io.h"

namespace dnr::metrics {

namespace {

std::vector<degrade::CorpusEntry> selected(const degrade::Manifest& m,
                                           const EvaluateOptions& o) {
  std::vector<degrade::CorpusEntry> out =
      o.split ? m.split(*o.split) : m.entries;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (out.empty()) throw ConfigError("no manifest entries to evaluate");
  return out;
}

template <typename PathFn>
MetricReport score_all(const degrade::Manifest& m, const EvaluateOptions& o, PathFn processed) {
  const auto entries = selected(m, o);
  std::vector<std::string> missing;
  for (const auto& e : entries) {
    for (const auto& p : {m.resolve(e.clean_path), processed(e)}) {
      if (!std::filesystem::exists(p)) missing.push_back(p.string());
    }
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " missing file(s):";
    for (const auto& p : missing) msg += "\n  " + p;
    throw IoError(msg);
  }
  std::vector<UtteranceScores> scores(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        const auto& e = entries[i];
        const auto clean = signal::read_wav(m.resolve(e.clean_path));
        const auto out = signal::read_wav(processed(e));
        scores[i] = {e.id,
                     e.snr_db,
                     e.room_label,
                     stoi(clean, out),
                     log_spectral_distance(clean, out),
                     segmental_snr(clean, out)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return summarize(std::move(scores));
}

void add(MetricMeans& m, const UtteranceScores& s) {
  m.stoi += s.stoi;
  m.lsd_db += s.lsd_db;
  m.segsnr_db += s.segsnr_db;
  ++m.count;
}

void finish(MetricMeans& m) {
  if (m.count == 0) return;
  m.stoi /= m.count;
  m.lsd_db /= m.count;
  m.segsnr_db /= m.count;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

nlohmann::ordered_json means_json(const MetricMeans& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["stoi"] = m.stoi;
  j["lsd_db"] = m.lsd_db;
  j["segsnr_db"] = m.segsnr_db;
  return j;
}

}  // namespace

MetricReport summarize(std::vector<UtteranceScores> scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  MetricReport r;
  std::map<std::pair<double, std::string>, MetricMeans> groups;
  for (const auto& s : scores) {
    add(r.overall, s);
    add(groups[{s.snr_db, s.room_label}], s);
  }
  finish(r.overall);
  for (auto& [key, means] : groups) {
    finish(means);
    r.groups.push_back({key.first, key.second, means});
  }
  r.utterances = std::move(scores);
  return r;
}

MetricReport evaluate_manifest(const degrade::Manifest& manifest,
                               const std::filesystem::path& enhanced_dir,
                               const EvaluateOptions& options) {
  return score_all(manifest, options, [&](const degrade::CorpusEntry& e) {
    return enhanced_dir / (e.id + ".wav");
  });
}

MetricReport evaluate_degraded(const degrade::Manifest& manifest,
                               const EvaluateOptions& options) {
  return score_all(manifest, options, [&](const degrade::CorpusEntry& e) {
    return manifest.resolve(e.degraded_path);
  });
}

std::string report_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "id,snr_db,room_label,stoi,lsd_db,segsnr_db\n";
  for (const auto& s : r.utterances) {
    os << s.id << ',' << fmt(s.snr_db) << ',' << s.room_label << ',' << fmt(s.stoi) << ','
       << fmt(s.lsd_db) << ',' << fmt(s.segsnr_db) << '\n';
  }
  return os.str();
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["overall"] = means_json(r.overall);
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    nlohmann::ordered_json e;
    e["snr_db"] = g.snr_db;
    e["room_label"] = g.room_label;
    e["means"] = means_json(g.means);
    j["groups"].push_back(e);
  }
  j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& s : r.utterances) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["snr_db"] = s.snr_db;
    e["room_label"] = s.room_label;
    e["stoi"] = s.stoi;
    e["lsd_db"] = s.lsd_db;
    e["segsnr_db"] = s.segsnr_db;
    j["utterances"].push_back(e);
  }
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& stem, const MetricReport& r) {
  for (const auto& [ext, body] : {std::pair<std::string, std::string>{".csv", report_csv(r)},
                                  {".json", report_json(r)}}) {
    const std::filesystem::path path = stem.string() + ext;
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw IoError("cannot write " + tmp.string());
      f << body;
      if (!f) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }
}

}  // namespace dnr::metrics
