// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_DEGRADE_CORPUS_H_
#define DNR_DEGRADE_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dnr::degrade {

enum class Split { kTrain, kValid, kTest };
std::string split_name(Split s);
Split parse_split(const std::string& s);

struct CorpusEntry {
  std::string id;
  // Relative to the manifest directory.
  std::string clean_path;
  std::string noise_path;
  std::string rir_path;
  std::string degraded_path;
  std::string noisy_path;
  double snr_db = 0.0;
  std::string room_label;
  Split split = Split::kTrain;
  // Common gain applied to every written signal to avoid clipping.
  double gain = 1.0;
  std::string noise_label;

  bool operator==(const CorpusEntry&) const = default;
};

std::string to_json_line(const CorpusEntry& e);
CorpusEntry parse_json_line(const std::string& line);

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<CorpusEntry> entries;

  std::filesystem::path resolve(const std::string& relative) const {
    return base_dir / relative;
  }
  std::vector<CorpusEntry> split(Split s) const;
};

// Entries are written sorted by id.
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

// All referenced files that do not exist, in entry order.
std::vector<std::string> missing_files(const Manifest& m);
// Throws IoError listing every missing file.
void validate_manifest(const Manifest& m);

// Relative split weights, e.g. "8/1/1".
struct SplitSpec {
  int train = 8;
  int valid = 1;
  int test = 1;
};
SplitSpec parse_split_spec(const std::string& text);
std::vector<double> parse_snr_list(const std::string& text);

struct CorpusOptions {
  std::filesystem::path clean_dir, noise_dir, rir_dir, out_dir;
  std::vector<double> snr_list{0.0, 5.0, 10.0, 15.0};
  SplitSpec splits;
  std::uint64_t seed = 1;
  int jobs = 1;
};

// Writes clean/, noise/, rir/, degraded/ and noisy/ float32 WAV files plus
// manifest.jsonl under out_dir and returns the manifest.
Manifest synthesize_corpus(const CorpusOptions& options);

}  // namespace dnr::degrade

#endif  // DNR_DEGRADE_CORPUS_H_
