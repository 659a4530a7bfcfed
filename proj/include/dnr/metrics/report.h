// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_METRICS_REPORT_H_
#define DNR_METRICS_REPORT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dnr/degrade/corpus.h"

namespace dnr::metrics {

struct UtteranceScores {
  std::string id;
  double snr_db = 0.0;
  std::string room_label;
  double stoi = 0.0;
  double lsd_db = 0.0;
  double segsnr_db = 0.0;
};

struct MetricMeans {
  double stoi = 0.0;
  double lsd_db = 0.0;
  double segsnr_db = 0.0;
  int count = 0;
};

struct GroupMeans {
  double snr_db = 0.0;
  std::string room_label;
  MetricMeans means;
};

struct MetricReport {
  std::vector<UtteranceScores> utterances;  // sorted by id
  MetricMeans overall;
  std::vector<GroupMeans> groups;  // sorted by (snr_db, room_label)
};

struct EvaluateOptions {
  // Entries evaluated; all splits when unset.
  std::optional<degrade::Split> split = degrade::Split::kTest;
  int jobs = 1;
};

// Scores <enhanced_dir>/<id>.wav against each entry's clean file. Every
// missing file is reported in one IoError.
MetricReport evaluate_manifest(const degrade::Manifest& manifest,
                               const std::filesystem::path& enhanced_dir,
                               const EvaluateOptions& options = {});

// Scores each entry's degraded file against its clean file.
MetricReport evaluate_degraded(const degrade::Manifest& manifest,
                               const EvaluateOptions& options = {});

MetricReport summarize(std::vector<UtteranceScores> scores);

// Columns: id, snr_db, room_label, stoi, lsd_db, segsnr_db.
std::string report_csv(const MetricReport& r);
std::string report_json(const MetricReport& r);
// Writes <stem>.csv and <stem>.json.
void write_report(const std::filesystem::path& stem, const MetricReport& r);

}  // namespace dnr::metrics

#endif  // DNR_METRICS_REPORT_H_
