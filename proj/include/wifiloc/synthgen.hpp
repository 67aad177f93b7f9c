#pragma once
// Synthetic crowd-sensing campaigns: a rectangular checkpoint grid, a roster
// of access points under a log-distance path-loss model with log-normal
// shadowing, and random walkers emitting byte-compatible walk logs.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wifiloc/common.hpp"
#include "wifiloc/floorplan.hpp"
#include "wifiloc/walklog.hpp"

namespace wifiloc {

struct AccessPoint {
  std::string bssid;
  std::string ssid;
  Point2 position;
  double tx_power_dbm = -40.0;  // reference RSSI at d0 = 1 m
  int frequency_mhz = 2412;
};

struct RadioEnvironment {
  std::vector<AccessPoint> aps;
  double path_loss_exponent = 3.0;
  double shadowing_sigma_db = 4.0;
  double visibility_floor_dbm = -97.0;
  double rssi_ceiling_dbm = -31.0;  // strongest value ever reported
};

struct CampaignConfig {
  int n_paths = 100;
  int min_taps = 5;  // keeps every generated path above the route filter
  int max_taps = 12;
  int64_t dwell_ms_min = 2500;
  int64_t dwell_ms_max = 6000;
  int64_t scan_period_ms = 2000;
  int64_t sensor_period_ms = 50;
  double hotspot_fraction = 0.0;  // paths that also carry a phone hotspot
  int64_t start_timestamp_ms = 1633437600000;
  uint64_t seed = 1;
};

struct InvalidDims : std::invalid_argument {
  InvalidDims() : std::invalid_argument("grid needs at least 2 columns and 2 rows") {}
};
struct DisconnectedGrid : std::invalid_argument {
  DisconnectedGrid() : std::invalid_argument("campaign requires a connected grid") {}
};

// cols x rows checkpoints at the given spacing, row-major ids, 4-neighbor
// adjacency.
CheckpointGrid generate_building(int cols, int rows, double spacing_m);

// Deterministic AP roster: positions uniform over the grid bounding box,
// reference powers uniform in [tx_min, tx_max].
std::vector<AccessPoint> generate_aps(const CheckpointGrid& grid, int n_aps, uint64_t seed,
                                      double tx_min_dbm = -55.0, double tx_max_dbm = -30.0);

// Log-distance path loss with shadowing:
//   rssi = tx - 10 n log10(max(d, d0)/d0) + Normal(0, sigma)
// Absent below the visibility floor; clipped at the ceiling otherwise.
std::optional<double> simulate_rssi(const RadioEnvironment& env, const AccessPoint& ap,
                                    Point2 position, Rng& rng);

// True walker position at each emitted scan burst, for oracle checks.
struct TruthSample {
  std::string path_id;
  int64_t timestamp_ms = 0;
  Point2 position;
};

struct Campaign {
  std::vector<WalkLog> logs;
  std::vector<TruthSample> truth;
};

// Random walks over the adjacency graph with per-checkpoint dwell. WiFi
// bursts fire on the scan period from the walker's interpolated position;
// sensor records fire on the sensor period with plausible noise. Hotspot
// paths carry an extra keyword-named AP that downstream filtering must drop.
Campaign generate_campaign(const RadioEnvironment& env, const CheckpointGrid& grid,
                           const CampaignConfig& config);

std::string aps_to_csv(const std::vector<AccessPoint>& aps);
std::vector<AccessPoint> aps_from_csv(const std::string& text);
std::string truth_to_csv(const std::vector<TruthSample>& truth);

}  // namespace wifiloc
