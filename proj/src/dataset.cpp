#include "wifiloc/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wifiloc {

void BssidVocabulary::rebuild_index() {
  index.clear();
  for (size_t i = 0; i < entries.size(); ++i) index[entries[i]] = i;
}

size_t Dataset::path_count() const { return path_ids().size(); }

std::vector<std::string> Dataset::path_ids() const {
  std::set<std::string> ids;
  for (const auto& row : rows) ids.insert(row.path_id);
  return {ids.begin(), ids.end()};
}

std::vector<WalkLog> filter_paths(const std::vector<WalkLog>& logs,
                                  const DatasetConfig& config) {
  std::vector<WalkLog> kept;
  for (const auto& log : logs)
    if (log.tap_count() >= static_cast<size_t>(config.min_taps)) kept.push_back(log);
  return kept;
}

std::vector<ScanGroup> associate_scans(const WalkLog& log, const CheckpointGrid& grid,
                                       int64_t window_ms) {
  std::vector<CheckpointTap> taps;
  for (const auto& tap : log.taps())
    if (grid.contains(tap.checkpoint_id)) taps.push_back(tap);
  if (taps.empty()) return {};

  std::vector<ScanGroup> groups;
  for (const auto& record : log.records) {
    const auto* obs = std::get_if<WifiObservation>(&record);
    if (!obs) continue;
    if (groups.empty() || groups.back().timestamp_ms != obs->timestamp_ms)
      groups.push_back({-1, obs->timestamp_ms, {}});
    groups.back().observations.push_back(*obs);
  }

  std::vector<ScanGroup> assigned;
  for (auto& group : groups) {
    int64_t best_dt = INT64_MAX;
    int best_id = -1;
    for (const auto& tap : taps) {  // taps are in record order, earlier wins ties
      const int64_t dt = std::abs(group.timestamp_ms - tap.timestamp_ms);
      if (dt < best_dt) {
        best_dt = dt;
        best_id = tap.checkpoint_id;
      }
    }
    if (best_dt <= window_ms) {
      group.checkpoint_id = best_id;
      assigned.push_back(std::move(group));
    }
  }
  return assigned;
}

BssidVocabulary build_vocabulary(const std::vector<WalkLog>& logs,
                                 const CheckpointGrid& grid,
                                 const DatasetConfig& config) {
  std::map<std::string, std::set<int>> presence;      // bssid -> checkpoint ids
  std::map<std::string, std::set<std::string>> ssids;  // bssid -> SSIDs seen
  for (const auto& log : logs) {
    for (const auto& group : associate_scans(log, grid, config.association_window_ms)) {
      for (const auto& obs : group.observations) {
        presence[obs.bssid].insert(group.checkpoint_id);
        ssids[obs.bssid].insert(obs.ssid);
      }
    }
  }

  BssidVocabulary vocab;
  vocab.min_checkpoint_presence = config.min_checkpoint_presence;
  vocab.hotspot_keywords = config.hotspot_keywords;
  vocab.corpus_fingerprint = corpus_fingerprint(logs);
  for (const auto& [bssid, checkpoints] : presence) {
    if (checkpoints.size() < static_cast<size_t>(config.min_checkpoint_presence)) continue;
    bool hotspot = false;
    for (const auto& ssid : ssids[bssid]) {
      for (const auto& keyword : config.hotspot_keywords) {
        if (icontains(ssid, keyword)) {
          hotspot = true;
          break;
        }
      }
      if (hotspot) break;
    }
    if (!hotspot) vocab.entries.push_back(bssid);
  }
  std::sort(vocab.entries.begin(), vocab.entries.end());
  vocab.rebuild_index();
  if (vocab.entries.empty()) throw EmptyVocabulary();
  return vocab;
}

std::vector<double> vectorize(const ScanGroup& group, const BssidVocabulary& vocabulary) {
  std::vector<double> features(vocabulary.size(), kMissingRssi);
  for (const auto& obs : group.observations) {
    const auto it = vocabulary.index.find(obs.bssid);
    if (it == vocabulary.index.end()) continue;
    double& slot = features[it->second];
    const double value = static_cast<double>(obs.rssi_dbm);
    if (slot == kMissingRssi || value > slot) slot = value;  // strongest reading wins
  }
  return features;
}

Dataset build_dataset(const std::vector<WalkLog>& logs, const CheckpointGrid& grid,
                      const DatasetConfig& config) {
  Dataset dataset;
  dataset.grid = grid;
  const auto kept = filter_paths(logs, config);
  if (kept.empty()) return dataset;
  dataset.vocabulary = build_vocabulary(kept, grid, config);
  for (const auto& log : kept) {
    for (const auto& group : associate_scans(log, grid, config.association_window_ms)) {
      FeatureRow row;
      row.path_id = log.path_id;
      row.timestamp_ms = group.timestamp_ms;
      row.checkpoint_id = group.checkpoint_id;
      row.target = grid.points.at(group.checkpoint_id);
      row.features = vectorize(group, dataset.vocabulary);
      dataset.rows.push_back(std::move(row));
    }
  }
  return dataset;
}

DatasetStats dataset_stats(const Dataset& dataset) {
  if (dataset.rows.empty()) throw EmptyDataset();
  DatasetStats stats;
  stats.n_rows = dataset.rows.size();
  stats.n_paths = dataset.path_count();
  stats.n_bssids = dataset.vocabulary.size();
  stats.rows_per_path =
      static_cast<double>(stats.n_rows) / static_cast<double>(std::max<size_t>(1, stats.n_paths));

  std::vector<double> values;
  std::vector<size_t> presence(dataset.vocabulary.size(), 0);
  size_t sentinel_cells = 0;
  for (const auto& row : dataset.rows) {
    for (size_t j = 0; j < row.features.size(); ++j) {
      const double v = row.features[j];
      if (v == kMissingRssi) {
        ++sentinel_cells;
        continue;
      }
      values.push_back(v);
      ++presence[j];
      ++stats.rssi_histogram[static_cast<int>(std::lround(v))];
    }
  }
  const size_t cells = stats.n_rows * dataset.vocabulary.size();
  stats.sentinel_fraction =
      cells == 0 ? 0.0 : static_cast<double>(sentinel_cells) / static_cast<double>(cells);
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    stats.rssi_min = values.front();
    stats.rssi_max = values.back();
    const size_t n = values.size();
    stats.rssi_median =
        (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.rssi_mean = sum / static_cast<double>(n);
  }
  for (size_t j = 0; j < dataset.vocabulary.size(); ++j)
    stats.bssid_presence.push_back({dataset.vocabulary.entries[j], presence[j]});
  return stats;
}

std::string DatasetStats::summary() const {
  std::ostringstream out;
  out << n_rows << " rows, " << n_paths << " paths, " << n_bssids << " BSSIDs\n";
  out << "rows per path: " << format_double(rows_per_path) << "\n";
  out << "rssi range [" << format_double(rssi_min) << ", " << format_double(rssi_max)
      << "], median " << format_double(rssi_median) << ", mean " << format_double(rssi_mean)
      << "\n";
  out << "sentinel fraction: " << format_double(sentinel_fraction) << "\n";
  return out.str();
}

std::string rssi_histogram_csv(const DatasetStats& stats) {
  std::string out = "rssi_dbm,count\n";
  for (const auto& [bin, count] : stats.rssi_histogram) {
    out += std::to_string(bin);
    out += ',';
    out += std::to_string(count);
    out += '\n';
  }
  return out;
}

std::string bssid_presence_csv(const DatasetStats& stats) {
  std::string out = "bssid,count,pct\n";
  for (const auto& [bssid, count] : stats.bssid_presence) {
    out += bssid;
    out += ',';
    out += std::to_string(count);
    out += ',';
    out += format_double(stats.n_rows == 0
                             ? 0.0
                             : 100.0 * static_cast<double>(count) /
                                   static_cast<double>(stats.n_rows));
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::string& csv_path,
                  const std::string& vocab_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DatasetFormatError("cannot open '" + csv_path + "' for writing");
  out << "path_id,timestamp_ms,checkpoint_id,x_m,y_m";
  for (size_t j = 1; j <= dataset.vocabulary.size(); ++j) out << ",rssid" << j;
  out << "\n";
  for (const auto& row : dataset.rows) {
    out << row.path_id << ',' << row.timestamp_ms << ',' << row.checkpoint_id << ','
        << format_double(row.target.x) << ',' << format_double(row.target.y);
    for (double v : row.features) out << ',' << format_double(v);
    out << "\n";
  }
  std::ofstream vocab_out(vocab_path, std::ios::binary);
  vocab_out << vocabulary_to_json(dataset.vocabulary);
}

Dataset load_dataset(const std::string& csv_path, const std::string& vocab_path,
                     const CheckpointGrid& grid) {
  std::ifstream vocab_in(vocab_path, std::ios::binary);
  if (!vocab_in) throw DatasetFormatError("cannot open vocabulary '" + vocab_path + "'");
  std::ostringstream vocab_buf;
  vocab_buf << vocab_in.rdbuf();

  Dataset dataset;
  dataset.grid = grid;
  dataset.vocabulary = vocabulary_from_json(vocab_buf.str());

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DatasetFormatError("cannot open dataset '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DatasetFormatError("empty dataset file");
  const size_t expected_fields = 5 + dataset.vocabulary.size();
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_char(line, ',');
    if (fields.size() != expected_fields)
      throw DatasetFormatError("dataset line " + std::to_string(line_no) +
                               ": wrong column count");
    FeatureRow row;
    row.path_id = fields[0];
    const auto ts = parse_int64(fields[1]);
    const auto cp = parse_int64(fields[2]);
    const auto x = parse_double(fields[3]);
    const auto y = parse_double(fields[4]);
    if (!ts || !cp || !x || !y)
      throw DatasetFormatError("dataset line " + std::to_string(line_no) + ": bad value");
    row.timestamp_ms = *ts;
    row.checkpoint_id = static_cast<int>(*cp);
    row.target = {*x, *y};
    row.features.reserve(dataset.vocabulary.size());
    for (size_t j = 5; j < fields.size(); ++j) {
      const auto v = parse_double(fields[j]);
      if (!v)
        throw DatasetFormatError("dataset line " + std::to_string(line_no) + ": bad RSSI");
      row.features.push_back(*v);
    }
    dataset.rows.push_back(std::move(row));
  }
  return dataset;
}

std::string vocabulary_to_json(const BssidVocabulary& vocabulary) {
  nlohmann::json j;
  j["entries"] = vocabulary.entries;
  j["min_checkpoint_presence"] = vocabulary.min_checkpoint_presence;
  j["hotspot_keywords"] = vocabulary.hotspot_keywords;
  j["corpus_fingerprint"] = vocabulary.corpus_fingerprint;
  return j.dump(2) + "\n";
}

BssidVocabulary vocabulary_from_json(const std::string& text) {
  BssidVocabulary vocab;
  try {
    const auto j = nlohmann::json::parse(text);
    vocab.entries = j.at("entries").get<std::vector<std::string>>();
    vocab.min_checkpoint_presence = j.at("min_checkpoint_presence").get<int>();
    vocab.hotspot_keywords = j.at("hotspot_keywords").get<std::vector<std::string>>();
    vocab.corpus_fingerprint = j.value("corpus_fingerprint", "");
  } catch (const nlohmann::json::exception& e) {
    throw DatasetFormatError(std::string("bad vocabulary sidecar: ") + e.what());
  }
  vocab.rebuild_index();
  return vocab;
}

Dataset project_columns(const Dataset& dataset, const std::vector<size_t>& keep) {
  Dataset out;
  out.grid = dataset.grid;
  out.vocabulary.min_checkpoint_presence = dataset.vocabulary.min_checkpoint_presence;
  out.vocabulary.hotspot_keywords = dataset.vocabulary.hotspot_keywords;
  out.vocabulary.corpus_fingerprint = dataset.vocabulary.corpus_fingerprint;
  for (size_t j : keep) out.vocabulary.entries.push_back(dataset.vocabulary.entries.at(j));
  out.vocabulary.rebuild_index();
  out.rows.reserve(dataset.rows.size());
  for (const auto& row : dataset.rows) {
    FeatureRow projected = row;
    projected.features.clear();
    projected.features.reserve(keep.size());
    for (size_t j : keep) projected.features.push_back(row.features[j]);
    out.rows.push_back(std::move(projected));
  }
  return out;
}

std::vector<FeatureRow> rows_in_grid(const Dataset& dataset, const CheckpointGrid& subgrid) {
  std::vector<FeatureRow> out;
  for (const auto& row : dataset.rows)
    if (subgrid.contains(row.checkpoint_id)) out.push_back(row);
  return out;
}

}  // namespace wifiloc
