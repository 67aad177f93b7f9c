#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "wifiloc/dataset.hpp"
#include "wifiloc/synthgen.hpp"

using namespace wifiloc;

namespace {

// Hand-built corpus: every burst sits exactly on a tap, so the association
// and presence bookkeeping are fully controlled.
WalkLog make_log(const std::string& id, const std::vector<int>& checkpoints,
                 const std::vector<std::pair<std::string, std::string>>& aps,
                 int rssi = -60) {
  WalkLog log;
  log.path_id = id;
  int64_t t = 1000;
  for (int cp : checkpoints) {
    log.records.emplace_back(CheckpointTap{t, cp});
    for (const auto& [bssid, ssid] : aps)
      log.records.emplace_back(WifiObservation{t, bssid, ssid, rssi, 2412});
    t += 4000;
  }
  return log;
}

CheckpointGrid line_grid(int n) {
  CheckpointGrid grid;
  for (int i = 0; i < n; ++i) {
    grid.points.emplace(i, Point2{2.5 * i, 0.0});
    if (i > 0) grid.add_edge(i - 1, i);
  }
  return grid;
}

}  // namespace

TEST_CASE("path filter keeps five taps, drops four") {
  DatasetConfig config;
  std::vector<WalkLog> logs;
  logs.push_back(make_log("four", {0, 1, 2, 3}, {{"aa:00:00:00:00:01", "net"}}));
  logs.push_back(make_log("five", {0, 1, 2, 3, 4}, {{"aa:00:00:00:00:01", "net"}}));
  const auto kept = filter_paths(logs, config);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].path_id == "five");
  CHECK(filter_paths({}, config).empty());
}

TEST_CASE("scan association picks the nearest tap in time") {
  CheckpointGrid grid = line_grid(20);
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(CheckpointTap{1633437608241, 12});
  log.records.emplace_back(
      WifiObservation{1633437608615, "f4:db:e6:aa:bb:cc", "SSID1", -57, 5620});
  log.records.emplace_back(CheckpointTap{1633437611901, 13});
  const auto groups = associate_scans(log, grid, 6000);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].checkpoint_id == 12);  // dt 374 ms vs 3286 ms
  CHECK(groups[0].timestamp_ms == 1633437608615);
}

TEST_CASE("equidistant bursts go to the earlier tap") {
  CheckpointGrid grid = line_grid(5);
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(CheckpointTap{1000, 0});
  log.records.emplace_back(WifiObservation{2000, "aa:00:00:00:00:01", "net", -50, 2412});
  log.records.emplace_back(CheckpointTap{3000, 1});
  const auto groups = associate_scans(log, grid, 6000);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].checkpoint_id == 0);
}

TEST_CASE("bursts outside every window are dropped") {
  CheckpointGrid grid = line_grid(5);
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(CheckpointTap{1000, 0});
  log.records.emplace_back(WifiObservation{11000, "aa:00:00:00:00:01", "net", -50, 2412});
  CHECK(associate_scans(log, grid, 6000).empty());
}

TEST_CASE("one scan group per burst, grouped by shared timestamp") {
  CheckpointGrid grid = line_grid(5);
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(CheckpointTap{1000, 0});
  log.records.emplace_back(WifiObservation{1000, "aa:00:00:00:00:01", "net", -50, 2412});
  log.records.emplace_back(WifiObservation{1000, "aa:00:00:00:00:02", "net2", -60, 2412});
  log.records.emplace_back(WifiObservation{3000, "aa:00:00:00:00:01", "net", -55, 2412});
  const auto groups = associate_scans(log, grid, 6000);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].observations.size() == 2);
  CHECK(groups[1].observations.size() == 1);
}

TEST_CASE("vocabulary applies the presence and hotspot rules at their boundaries") {
  CheckpointGrid grid = line_grid(60);
  DatasetConfig config;  // presence threshold 50
  // one path visiting 55 distinct checkpoints; per-checkpoint AP visibility
  // pins each BSSID's distinct-presence count exactly
  WalkLog log;
  log.path_id = "p";
  int64_t t = 1000;
  for (int cp = 0; cp < 55; ++cp) {
    log.records.emplace_back(CheckpointTap{t, cp});
    log.records.emplace_back(WifiObservation{t, "aa:00:00:00:00:55", "at-55", -60, 2412});
    if (cp < 49)
      log.records.emplace_back(WifiObservation{t, "aa:00:00:00:00:49", "at-49", -60, 2412});
    if (cp < 50)
      log.records.emplace_back(
          WifiObservation{t, "aa:00:00:00:00:50", "exactly-50", -60, 2412});
    log.records.emplace_back(
        WifiObservation{t, "aa:00:00:00:00:99", "Johns iPhone", -40, 2412});
    t += 4000;
  }
  const auto vocab = build_vocabulary({log}, grid, config);
  CHECK(vocab.size() == 2);
  CHECK(vocab.index.count("aa:00:00:00:00:55"));       // 55 checkpoints: kept
  CHECK(vocab.index.count("aa:00:00:00:00:50"));       // exactly 50: kept
  CHECK_FALSE(vocab.index.count("aa:00:00:00:00:49"));  // 49: dropped
  CHECK_FALSE(vocab.index.count("aa:00:00:00:00:99"));  // hotspot keyword: dropped
}

TEST_CASE("vocabulary is deterministic and lexicographically ordered") {
  const auto grid = generate_building(8, 8, 2.5);
  RadioEnvironment env;
  env.aps = generate_aps(grid, 15, 21);
  CampaignConfig config;
  config.n_paths = 60;
  config.seed = 21;
  config.sensor_period_ms = 10000;
  const auto campaign = generate_campaign(env, grid, config);
  DatasetConfig dconfig;
  dconfig.min_checkpoint_presence = 10;
  const auto v1 = build_vocabulary(campaign.logs, grid, dconfig);
  const auto v2 = build_vocabulary(campaign.logs, grid, dconfig);
  CHECK(v1.entries == v2.entries);
  CHECK(std::is_sorted(v1.entries.begin(), v1.entries.end()));
}

TEST_CASE("empty vocabulary is an error") {
  CheckpointGrid grid = line_grid(5);
  std::vector<WalkLog> logs;
  logs.push_back(make_log("p", {0, 1, 2, 3, 4}, {{"aa:00:00:00:00:01", "net"}}));
  DatasetConfig config;  // presence threshold 50 >> 5 checkpoints
  CHECK_THROWS_AS(build_vocabulary(logs, grid, config), EmptyVocabulary);
}

TEST_CASE("vectorize fills sentinels and keeps the strongest duplicate") {
  BssidVocabulary vocab;
  vocab.entries = {"aa:00:00:00:00:01", "aa:00:00:00:00:02", "aa:00:00:00:00:03"};
  vocab.rebuild_index();
  ScanGroup group;
  group.checkpoint_id = 0;
  group.timestamp_ms = 1;
  CHECK(vectorize(group, vocab) ==
        std::vector<double>{kMissingRssi, kMissingRssi, kMissingRssi});
  group.observations.push_back({1, "aa:00:00:00:00:01", "net", -57, 2412});
  CHECK(vectorize(group, vocab) == std::vector<double>{-57, kMissingRssi, kMissingRssi});
  group.observations.push_back({1, "aa:00:00:00:00:02", "net", -80, 2412});
  group.observations.push_back({1, "aa:00:00:00:00:02", "net", -70, 2412});
  CHECK(vectorize(group, vocab) == std::vector<double>{-57, -70, kMissingRssi});
  group.observations.push_back({1, "ff:ff:ff:ff:ff:ff", "other", -30, 2412});
  CHECK(vectorize(group, vocab)[2] == kMissingRssi);  // unknown BSSID ignored
}

TEST_CASE("build_dataset composes the pipeline over a synthetic campaign") {
  const auto grid = generate_building(8, 8, 2.5);
  RadioEnvironment env;
  env.aps = generate_aps(grid, 12, 31);
  CampaignConfig cconfig;
  cconfig.n_paths = 80;
  cconfig.seed = 31;
  cconfig.sensor_period_ms = 10000;
  cconfig.hotspot_fraction = 0.3;
  const auto campaign = generate_campaign(env, grid, cconfig);
  DatasetConfig dconfig;
  dconfig.min_checkpoint_presence = 20;
  const auto dataset = build_dataset(campaign.logs, grid, dconfig);

  REQUIRE_FALSE(dataset.rows.empty());
  // vocabulary holds exactly the roster, no hotspots
  std::set<std::string> roster;
  for (const auto& ap : env.aps) roster.insert(ap.bssid);
  CHECK(std::set<std::string>(dataset.vocabulary.entries.begin(),
                              dataset.vocabulary.entries.end()) == roster);

  // row count equals an independent recount of retained (tap, burst) merges
  size_t expected_rows = 0;
  for (const auto& log : filter_paths(campaign.logs, dconfig))
    expected_rows += associate_scans(log, grid, dconfig.association_window_ms).size();
  CHECK(dataset.rows.size() == expected_rows);

  // path integrity: row path set equals retained log names
  std::set<std::string> retained;
  for (const auto& log : filter_paths(campaign.logs, dconfig)) retained.insert(log.path_id);
  std::set<std::string> in_rows;
  for (const auto& row : dataset.rows) in_rows.insert(row.path_id);
  CHECK(in_rows == retained);

  // column semantics: non-sentinel implies that BSSID really is in the burst
  const auto& log0 = campaign.logs.front();
  const auto groups = associate_scans(log0, grid, dconfig.association_window_ms);
  for (const auto& row : dataset.rows) {
    if (row.path_id != log0.path_id) continue;
    const ScanGroup* group = nullptr;
    for (const auto& g : groups)
      if (g.timestamp_ms == row.timestamp_ms) group = &g;
    REQUIRE(group != nullptr);
    for (size_t j = 0; j < row.features.size(); ++j) {
      if (row.features[j] == kMissingRssi) continue;
      bool found = false;
      for (const auto& obs : group->observations)
        if (obs.bssid == dataset.vocabulary.entries[j]) found = true;
      CHECK(found);
    }
  }

  // sentinel fraction strictly inside (0, 1) on a multi-AP corpus
  const auto stats = dataset_stats(dataset);
  CHECK(stats.sentinel_fraction > 0.0);
  CHECK(stats.sentinel_fraction < 1.0);

  // every target matches its checkpoint position
  for (const auto& row : dataset.rows) {
    const Point2 p = grid.points.at(row.checkpoint_id);
    CHECK(row.target.x == p.x);
    CHECK(row.target.y == p.y);
  }
}

TEST_CASE("empty corpus builds an empty dataset") {
  const auto grid = generate_building(3, 3, 2.5);
  const auto dataset = build_dataset({}, grid, {});
  CHECK(dataset.rows.empty());
}

TEST_CASE("stats of a single-row single-visible dataset collapse to that value") {
  Dataset dataset;
  dataset.vocabulary.entries = {"aa:00:00:00:00:01", "aa:00:00:00:00:02"};
  dataset.vocabulary.rebuild_index();
  FeatureRow row;
  row.path_id = "p";
  row.checkpoint_id = 0;
  row.features = {-60.0, kMissingRssi};
  dataset.rows.push_back(row);
  const auto stats = dataset_stats(dataset);
  CHECK(stats.rssi_min == -60.0);
  CHECK(stats.rssi_max == -60.0);
  CHECK(stats.rssi_median == -60.0);
  CHECK(stats.rssi_mean == -60.0);
  CHECK(stats.sentinel_fraction == doctest::Approx(0.5));
  CHECK_THROWS_AS(dataset_stats(Dataset{}), EmptyDataset);
}

TEST_CASE("stats equal an independent recount on synthetic data") {
  const auto grid = generate_building(6, 6, 2.5);
  RadioEnvironment env;
  env.aps = generate_aps(grid, 10, 13);
  CampaignConfig cconfig;
  cconfig.n_paths = 40;
  cconfig.seed = 13;
  cconfig.sensor_period_ms = 10000;
  const auto campaign = generate_campaign(env, grid, cconfig);
  DatasetConfig dconfig;
  dconfig.min_checkpoint_presence = 10;
  const auto dataset = build_dataset(campaign.logs, grid, dconfig);
  const auto stats = dataset_stats(dataset);

  std::vector<double> values;
  for (const auto& row : dataset.rows)
    for (double v : row.features)
      if (v != kMissingRssi) values.push_back(v);
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  CHECK(stats.rssi_min == values.front());
  CHECK(stats.rssi_max == values.back());
  CHECK(stats.rssi_mean == doctest::Approx(sum / values.size()).epsilon(1e-12));
  const size_t n = values.size();
  const double median =
      (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  CHECK(stats.rssi_median == median);
  size_t hist_total = 0;
  for (const auto& [bin, count] : stats.rssi_histogram) hist_total += count;
  CHECK(hist_total == values.size());
}

TEST_CASE("dataset CSV and vocabulary sidecar round-trip") {
  const auto grid = generate_building(6, 6, 2.5);
  RadioEnvironment env;
  env.aps = generate_aps(grid, 8, 19);
  CampaignConfig cconfig;
  cconfig.n_paths = 30;
  cconfig.seed = 19;
  cconfig.sensor_period_ms = 10000;
  const auto campaign = generate_campaign(env, grid, cconfig);
  DatasetConfig dconfig;
  dconfig.min_checkpoint_presence = 10;
  const auto dataset = build_dataset(campaign.logs, grid, dconfig);

  const auto dir = std::filesystem::temp_directory_path() / "wifiloc_dataset_test";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "dataset.csv").string();
  const auto vocab = (dir / "vocab.json").string();
  save_dataset(dataset, csv, vocab);
  const auto loaded = load_dataset(csv, vocab, grid);

  REQUIRE(loaded.rows.size() == dataset.rows.size());
  CHECK(loaded.vocabulary.entries == dataset.vocabulary.entries);
  CHECK(loaded.vocabulary.corpus_fingerprint == dataset.vocabulary.corpus_fingerprint);
  for (size_t i = 0; i < dataset.rows.size(); ++i) {
    CHECK(loaded.rows[i].path_id == dataset.rows[i].path_id);
    CHECK(loaded.rows[i].timestamp_ms == dataset.rows[i].timestamp_ms);
    CHECK(loaded.rows[i].checkpoint_id == dataset.rows[i].checkpoint_id);
    CHECK(loaded.rows[i].features == dataset.rows[i].features);  // exact round trip
    CHECK(loaded.rows[i].target.x == dataset.rows[i].target.x);
    CHECK(loaded.rows[i].target.y == dataset.rows[i].target.y);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("column projection keeps row identity and selected features") {
  Dataset dataset;
  dataset.vocabulary.entries = {"a1", "b2", "c3"};
  dataset.vocabulary.rebuild_index();
  FeatureRow row;
  row.path_id = "p";
  row.features = {-50, -60, -70};
  dataset.rows.push_back(row);
  const auto projected = project_columns(dataset, {0, 2});
  CHECK(projected.vocabulary.entries == std::vector<std::string>{"a1", "c3"});
  CHECK(projected.rows[0].features == std::vector<double>{-50, -70});
}
