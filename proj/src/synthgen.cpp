#include "wifiloc/synthgen.hpp"

#include <algorithm>
#include <cmath>

namespace wifiloc {

namespace {

std::string make_bssid(uint64_t index) {
  // Locally administered prefix keeps synthetic MACs out of vendor space.
  char buf[18];
  std::snprintf(buf, sizeof(buf), "02:%02x:%02x:%02x:%02x:%02x",
                static_cast<unsigned>((index >> 32) & 0xff),
                static_cast<unsigned>((index >> 24) & 0xff),
                static_cast<unsigned>((index >> 16) & 0xff),
                static_cast<unsigned>((index >> 8) & 0xff),
                static_cast<unsigned>(index & 0xff));
  return buf;
}

const int kFrequencies[] = {2412, 2437, 2462, 5180, 5220, 5620};

const char* kHotspotSsids[] = {
    "AndroidAP",   "Galaxy S21", "Johns iPhone", "HUAWEI P30",
    "Pixel 7 Pro", "Nokia 5310", "Honor 8X",
};

}  // namespace

CheckpointGrid generate_building(int cols, int rows, double spacing_m) {
  if (cols < 2 || rows < 2) throw InvalidDims();
  CheckpointGrid grid;
  grid.nominal_spacing_m = spacing_m;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      grid.points.emplace(id, Point2{c * spacing_m, r * spacing_m});
      if (c > 0) grid.add_edge(id - 1, id);
      if (r > 0) grid.add_edge(id - cols, id);
    }
  }
  return grid;
}

std::vector<AccessPoint> generate_aps(const CheckpointGrid& grid, int n_aps, uint64_t seed,
                                      double tx_min_dbm, double tx_max_dbm) {
  double max_x = 0.0, max_y = 0.0;
  for (const auto& [id, p] : grid.points) {
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  Rng rng(derive_seed(seed, 0xA5));
  std::vector<AccessPoint> aps;
  aps.reserve(static_cast<size_t>(n_aps));
  for (int i = 0; i < n_aps; ++i) {
    AccessPoint ap;
    ap.bssid = make_bssid(static_cast<uint64_t>(i) + 1);
    ap.ssid = "net" + std::to_string(i + 1);
    ap.position = {rng.uniform(0.0, max_x), rng.uniform(0.0, max_y)};
    ap.tx_power_dbm = rng.uniform(tx_min_dbm, tx_max_dbm);
    ap.frequency_mhz = kFrequencies[rng.bounded(std::size(kFrequencies))];
    aps.push_back(std::move(ap));
  }
  return aps;
}

std::optional<double> simulate_rssi(const RadioEnvironment& env, const AccessPoint& ap,
                                    Point2 position, Rng& rng) {
  constexpr double d0 = 1.0;
  const double d = std::max(distance(ap.position, position), d0);
  double rssi = ap.tx_power_dbm - 10.0 * env.path_loss_exponent * std::log10(d / d0);
  if (env.shadowing_sigma_db > 0.0) rssi += rng.normal(0.0, env.shadowing_sigma_db);
  if (rssi < env.visibility_floor_dbm) return std::nullopt;
  return std::min(rssi, env.rssi_ceiling_dbm);
}

Campaign generate_campaign(const RadioEnvironment& env, const CheckpointGrid& grid,
                           const CampaignConfig& config) {
  if (!grid.connected() || grid.points.empty()) throw DisconnectedGrid();

  // Neighbor lists in deterministic id order.
  std::map<int, std::vector<int>> neighbors;
  for (const auto& [a, b] : grid.adjacency) {
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }
  for (auto& [id, list] : neighbors) std::sort(list.begin(), list.end());
  std::vector<int> ids;
  for (const auto& [id, p] : grid.points) ids.push_back(id);

  Campaign campaign;
  for (int p = 0; p < config.n_paths; ++p) {
    Rng rng(derive_seed(config.seed, static_cast<uint64_t>(p)));
    WalkLog log;
    char name[32];
    std::snprintf(name, sizeof(name), "path_%04d", p + 1);
    log.path_id = name;

    const int n_taps =
        config.min_taps + static_cast<int>(rng.bounded(
                              static_cast<uint64_t>(config.max_taps - config.min_taps + 1)));
    std::vector<int> route;
    route.push_back(ids[rng.bounded(ids.size())]);
    while (static_cast<int>(route.size()) < n_taps) {
      const auto& opts = neighbors[route.back()];
      route.push_back(opts.empty() ? route.back() : opts[rng.bounded(opts.size())]);
    }

    std::vector<int64_t> tap_times;
    int64_t t = config.start_timestamp_ms + static_cast<int64_t>(p) * 1000000;
    for (int k = 0; k < n_taps; ++k) {
      tap_times.push_back(t);
      log.records.emplace_back(CheckpointTap{t, route[static_cast<size_t>(k)]});
      t += rng.uniform(static_cast<double>(config.dwell_ms_min),
                       static_cast<double>(config.dwell_ms_max));
    }
    const int64_t t_start = tap_times.front();
    const int64_t t_end = tap_times.back();

    auto position_at = [&](int64_t when) -> Point2 {
      if (when <= t_start) return grid.points.at(route.front());
      if (when >= t_end) return grid.points.at(route.back());
      size_t k = 0;
      while (k + 1 < tap_times.size() && tap_times[k + 1] <= when) ++k;
      const Point2 a = grid.points.at(route[k]);
      const Point2 b = grid.points.at(route[k + 1]);
      const double f = static_cast<double>(when - tap_times[k]) /
                       static_cast<double>(tap_times[k + 1] - tap_times[k]);
      return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
    };

    const bool hotspot_path = rng.uniform01() < config.hotspot_fraction;
    AccessPoint hotspot;
    if (hotspot_path) {
      hotspot.bssid = make_bssid(0xf0000000ull + static_cast<uint64_t>(p));
      hotspot.ssid = kHotspotSsids[rng.bounded(std::size(kHotspotSsids))];
      hotspot.tx_power_dbm = -35.0;
      hotspot.frequency_mhz = 2437;
    }

    for (int64_t ts = t_start; ts <= t_end; ts += config.scan_period_ms) {
      const Point2 pos = position_at(ts);
      campaign.truth.push_back({log.path_id, ts, pos});
      for (const auto& ap : env.aps) {
        const auto rssi = simulate_rssi(env, ap, pos, rng);
        if (!rssi) continue;
        log.records.emplace_back(WifiObservation{
            ts, ap.bssid, ap.ssid, static_cast<int>(std::lround(*rssi)), ap.frequency_mhz});
      }
      if (hotspot_path) {
        // The hotspot rides in the walker's pocket: always close, always loud.
        hotspot.position = {pos.x + 0.5, pos.y};
        const auto rssi = simulate_rssi(env, hotspot, pos, rng);
        if (rssi)
          log.records.emplace_back(WifiObservation{ts, hotspot.bssid, hotspot.ssid,
                                                   static_cast<int>(std::lround(*rssi)),
                                                   hotspot.frequency_mhz});
      }
    }

    for (int64_t ts = t_start; ts <= t_end; ts += config.sensor_period_ms) {
      log.records.emplace_back(SensorSample{
          ts, SensorKind::Gyroscope,
          {rng.normal(0.0, 0.2), rng.normal(0.0, 0.2), rng.normal(0.0, 0.2)}, 3});
      log.records.emplace_back(SensorSample{
          ts, SensorKind::RotationVector,
          {rng.normal(0.0, 0.5), rng.normal(0.0, 0.5), rng.normal(0.0, 0.5)}, 3});
      log.records.emplace_back(SensorSample{
          ts, SensorKind::Accelerometer,
          {rng.normal(0.0, 0.4), rng.normal(0.0, 0.4), rng.normal(9.81, 0.4)}, 3});
      log.records.emplace_back(SensorSample{
          ts, SensorKind::MagneticField,
          {rng.normal(-25.0, 5.0), rng.normal(10.0, 5.0), rng.normal(170.0, 5.0)}, 0});
    }

    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const LogRecord& a, const LogRecord& b) {
                       return record_timestamp(a) < record_timestamp(b);
                     });
    campaign.logs.push_back(std::move(log));
  }
  return campaign;
}

std::string aps_to_csv(const std::vector<AccessPoint>& aps) {
  std::string out = "bssid,ssid,x_m,y_m,tx_power_dbm,frequency_mhz\n";
  for (const auto& ap : aps) {
    out += ap.bssid;
    out += ',';
    out += ap.ssid;
    out += ',';
    out += format_double(ap.position.x);
    out += ',';
    out += format_double(ap.position.y);
    out += ',';
    out += format_double(ap.tx_power_dbm);
    out += ',';
    out += std::to_string(ap.frequency_mhz);
    out += '\n';
  }
  return out;
}

std::vector<AccessPoint> aps_from_csv(const std::string& text) {
  std::vector<AccessPoint> aps;
  bool first = true;
  for (const auto& line : split_char(text, '\n')) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;
    }
    const auto fields = split_char(line, ',');
    if (fields.size() != 6) continue;
    AccessPoint ap;
    ap.bssid = fields[0];
    ap.ssid = fields[1];
    ap.position = {parse_double(fields[2]).value_or(0.0),
                   parse_double(fields[3]).value_or(0.0)};
    ap.tx_power_dbm = parse_double(fields[4]).value_or(-40.0);
    ap.frequency_mhz = static_cast<int>(parse_int64(fields[5]).value_or(2412));
    aps.push_back(std::move(ap));
  }
  return aps;
}

std::string truth_to_csv(const std::vector<TruthSample>& truth) {
  std::string out = "path_id,timestamp_ms,x_m,y_m\n";
  for (const auto& sample : truth) {
    out += sample.path_id;
    out += ',';
    out += std::to_string(sample.timestamp_ms);
    out += ',';
    out += format_double(sample.position.x);
    out += ',';
    out += format_double(sample.position.y);
    out += '\n';
  }
  return out;
}

}  // namespace wifiloc
