#pragma once
// Turns a corpus of walk logs into a tabular fingerprint dataset: path
// filtering, BSSID vocabulary retention, scan-to-checkpoint association and
// RSSI vectorization with a -999 missing sentinel.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "wifiloc/common.hpp"
#include "wifiloc/floorplan.hpp"
#include "wifiloc/walklog.hpp"

namespace wifiloc {

constexpr double kMissingRssi = -999.0;

struct DatasetConfig {
  int min_taps = 5;                  // routes with fewer checkpoint taps are dropped
  int min_checkpoint_presence = 50;  // distinct checkpoints a BSSID must reach
  std::vector<std::string> hotspot_keywords = {"Android", "Galaxy", "iPhone",
                                               "HUAWEI",  "Pixel",  "Nokia", "Honor"};
  int64_t association_window_ms = 6000;  // three scan periods
};

struct BssidVocabulary {
  std::vector<std::string> entries;  // lexicographically sorted
  std::unordered_map<std::string, size_t> index;
  int min_checkpoint_presence = 50;
  std::vector<std::string> hotspot_keywords;
  std::string corpus_fingerprint;

  size_t size() const { return entries.size(); }
  void rebuild_index();
};

struct FeatureRow {
  std::string path_id;
  int64_t timestamp_ms = 0;
  int checkpoint_id = -1;
  Point2 target;
  std::vector<double> features;  // vocabulary-wide RSSI vector, kMissingRssi when unseen
};

struct Dataset {
  std::vector<FeatureRow> rows;
  BssidVocabulary vocabulary;
  CheckpointGrid grid;

  size_t path_count() const;
  std::vector<std::string> path_ids() const;  // sorted unique
};

// One WiFi scan burst (observations sharing a timestamp) attributed to the
// nearest-in-time checkpoint tap.
struct ScanGroup {
  int checkpoint_id = -1;
  int64_t timestamp_ms = 0;
  std::vector<WifiObservation> observations;
};

struct EmptyVocabulary : std::runtime_error {
  EmptyVocabulary()
      : std::runtime_error(
            "no BSSID survived retention; corpus too small for the presence "
            "threshold (lower min_checkpoint_presence?)") {}
};
struct EmptyDataset : std::runtime_error {
  EmptyDataset() : std::runtime_error("dataset has no rows") {}
};
struct DatasetFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keeps exactly the logs with >= config.min_taps checkpoint taps.
std::vector<WalkLog> filter_paths(const std::vector<WalkLog>& logs,
                                  const DatasetConfig& config = {});

// Bursts are grouped by identical timestamp and assigned to the tap with the
// smallest |dt| within the window (earlier tap wins ties); bursts outside
// every window are dropped. One group per burst.
std::vector<ScanGroup> associate_scans(const WalkLog& log, const CheckpointGrid& grid,
                                       int64_t window_ms = 6000);

// A BSSID is retained iff it was seen (post association) at at least
// min_checkpoint_presence distinct checkpoints and no SSID it ever carried
// contains a hotspot keyword (case-insensitive).
BssidVocabulary build_vocabulary(const std::vector<WalkLog>& logs,
                                 const CheckpointGrid& grid,
                                 const DatasetConfig& config = {});

// Dense RSSI vector over the vocabulary; duplicate BSSIDs in one burst keep
// the strongest reading.
std::vector<double> vectorize(const ScanGroup& group, const BssidVocabulary& vocabulary);

// filter_paths -> build_vocabulary -> associate_scans -> vectorize.
// One row per retained scan burst.
Dataset build_dataset(const std::vector<WalkLog>& logs, const CheckpointGrid& grid,
                      const DatasetConfig& config = {});

struct DatasetStats {
  size_t n_rows = 0;
  size_t n_paths = 0;
  size_t n_bssids = 0;
  double rows_per_path = 0.0;
  double rssi_min = 0.0, rssi_max = 0.0, rssi_median = 0.0, rssi_mean = 0.0;
  double sentinel_fraction = 0.0;
  // presence = rows in which the column is non-sentinel; pct relative to rows
  std::vector<std::pair<std::string, size_t>> bssid_presence;
  std::map<int, size_t> rssi_histogram;  // integer dBm bin -> count

  std::string summary() const;
};

DatasetStats dataset_stats(const Dataset& dataset);
std::string rssi_histogram_csv(const DatasetStats& stats);
std::string bssid_presence_csv(const DatasetStats& stats);

// Dataset CSV: path_id,timestamp_ms,checkpoint_id,x_m,y_m,rssid1..rssidN with
// the sentinel written literally as -999. The vocabulary travels in a JSON
// sidecar (ordered BSSIDs, filter parameters, corpus fingerprint).
void save_dataset(const Dataset& dataset, const std::string& csv_path,
                  const std::string& vocab_path);
Dataset load_dataset(const std::string& csv_path, const std::string& vocab_path,
                     const CheckpointGrid& grid);

std::string vocabulary_to_json(const BssidVocabulary& vocabulary);
BssidVocabulary vocabulary_from_json(const std::string& text);

// Restrict a dataset to a subset of vocabulary columns (simulates venues with
// fewer access points installed). keep is a sorted list of column indices.
Dataset project_columns(const Dataset& dataset, const std::vector<size_t>& keep);

// Rows whose checkpoint belongs to the given sub-grid.
std::vector<FeatureRow> rows_in_grid(const Dataset& dataset, const CheckpointGrid& subgrid);

}  // namespace wifiloc
