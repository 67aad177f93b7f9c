#include "wifiloc/walklog.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "wifiloc/common.hpp"
#include "wifiloc/floorplan.hpp"

namespace fs = std::filesystem;

namespace wifiloc {

namespace {

constexpr std::string_view kWifiToken = "TYPE_WIFI";
constexpr std::string_view kCheckpointToken = "TYPE_CHECKPOINT";

const std::map<std::string_view, SensorKind> kSensorTokens = {
    {"TYPE_GYROSCOPE", SensorKind::Gyroscope},
    {"TYPE_ROTATION_VECTOR", SensorKind::RotationVector},
    {"TYPE_ACCELEROMETER", SensorKind::Accelerometer},
    {"TYPE_MAGNETIC_FIELD", SensorKind::MagneticField},
};

}  // namespace

const char* sensor_kind_token(SensorKind kind) {
  switch (kind) {
    case SensorKind::Gyroscope: return "TYPE_GYROSCOPE";
    case SensorKind::RotationVector: return "TYPE_ROTATION_VECTOR";
    case SensorKind::Accelerometer: return "TYPE_ACCELEROMETER";
    case SensorKind::MagneticField: return "TYPE_MAGNETIC_FIELD";
  }
  return "TYPE_UNKNOWN";
}

int64_t record_timestamp(const LogRecord& r) {
  return std::visit([](const auto& rec) { return rec.timestamp_ms; }, r);
}

size_t WalkLog::tap_count() const {
  size_t n = 0;
  for (const auto& r : records)
    if (std::holds_alternative<CheckpointTap>(r)) ++n;
  return n;
}

std::vector<CheckpointTap> WalkLog::taps() const {
  std::vector<CheckpointTap> out;
  for (const auto& r : records)
    if (const auto* tap = std::get_if<CheckpointTap>(&r)) out.push_back(*tap);
  return out;
}

bool is_valid_bssid(std::string_view s) {
  if (s.size() != 17) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i % 3 == 2) {
      if (s[i] != ':') return false;
    } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
      return false;
    }
  }
  return true;
}

WalkLog parse_log(std::string_view text, const std::string& path_id) {
  WalkLog log;
  log.path_id = path_id;

  size_t line_no = 0;
  size_t pos = 0;
  bool saw_out_of_order = false;
  int64_t prev_ts = INT64_MIN;

  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    const auto tokens = split_whitespace(line);
    if (tokens.empty()) continue;
    if (tokens.size() < 2) throw MalformedLine(line_no, "expected `<timestamp> TYPE_* ...`");

    const auto ts = parse_int64(tokens[0]);
    if (!ts) throw MalformedLine(line_no, "bad timestamp");
    const std::string_view type = tokens[1];

    if (auto it = kSensorTokens.find(type); it != kSensorTokens.end()) {
      if (tokens.size() != 6)
        throw MalformedLine(line_no, "sensor line needs 3 values and a status");
      SensorSample s;
      s.timestamp_ms = *ts;
      s.kind = it->second;
      for (int i = 0; i < 3; ++i) {
        const auto v = parse_double(tokens[static_cast<size_t>(2 + i)]);
        if (!v) throw MalformedLine(line_no, "bad sensor value");
        s.values[static_cast<size_t>(i)] = *v;
      }
      const auto status = parse_int64(tokens[5]);
      if (!status) throw MalformedLine(line_no, "bad sensor status");
      s.status = static_cast<int>(*status);
      log.records.emplace_back(s);
    } else if (type == kWifiToken) {
      // SSIDs may contain spaces: fixed fields are taken from both ends and
      // the SSID is whatever remains in the middle.
      if (tokens.size() < 5) throw MalformedLine(line_no, "wifi line too short");
      WifiObservation w;
      w.timestamp_ms = *ts;
      w.bssid = to_lower(tokens[2]);
      if (!is_valid_bssid(w.bssid)) throw MalformedLine(line_no, "bad BSSID");
      const auto freq = parse_int64(tokens[tokens.size() - 1]);
      const auto rssi = parse_int64(tokens[tokens.size() - 2]);
      if (!freq || !rssi) throw MalformedLine(line_no, "bad RSSI or frequency");
      if (*rssi < -120 || *rssi > 0) throw MalformedLine(line_no, "RSSI out of range");
      w.rssi_dbm = static_cast<int>(*rssi);
      w.frequency_mhz = static_cast<int>(*freq);
      std::string ssid;
      for (size_t i = 3; i + 2 < tokens.size(); ++i) {
        if (!ssid.empty()) ssid += ' ';
        ssid += tokens[i];
      }
      w.ssid = std::move(ssid);
      log.records.emplace_back(std::move(w));
    } else if (type == kCheckpointToken) {
      if (tokens.size() != 3) throw MalformedLine(line_no, "checkpoint line needs one id");
      const auto id = parse_int64(tokens[2]);
      if (!id || *id < 0) throw MalformedLine(line_no, "bad checkpoint id");
      log.records.emplace_back(CheckpointTap{*ts, static_cast<int>(*id)});
    } else if (type.starts_with("TYPE_")) {
      log.warnings.push_back({ParseWarning::Kind::UnknownRecordType, line_no,
                              std::string(type)});
      continue;
    } else {
      throw MalformedLine(line_no, "unrecognized record token");
    }

    if (*ts < prev_ts) saw_out_of_order = true;
    prev_ts = *ts;
  }

  if (log.records.empty()) throw EmptyLog(path_id);

  if (saw_out_of_order) {
    log.warnings.push_back(
        {ParseWarning::Kind::OutOfOrderTimestamps, 0, "records re-sorted"});
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const LogRecord& a, const LogRecord& b) {
                       return record_timestamp(a) < record_timestamp(b);
                     });
  }
  return log;
}

std::string write_log(const WalkLog& log) {
  std::string out;
  out.reserve(log.records.size() * 48);
  for (const auto& record : log.records) {
    std::visit(
        [&out](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          out += std::to_string(r.timestamp_ms);
          if constexpr (std::is_same_v<T, SensorSample>) {
            out += ' ';
            out += sensor_kind_token(r.kind);
            for (double v : r.values) {
              out += ' ';
              out += format_double(v);
            }
            out += ' ';
            out += std::to_string(r.status);
          } else if constexpr (std::is_same_v<T, WifiObservation>) {
            out += " TYPE_WIFI ";
            out += r.bssid;
            out += ' ';
            out += r.ssid;
            out += ' ';
            out += std::to_string(r.rssi_dbm);
            out += ' ';
            out += std::to_string(r.frequency_mhz);
          } else {
            out += " TYPE_CHECKPOINT ";
            out += std::to_string(r.checkpoint_id);
          }
          out += '\n';
        },
        record);
  }
  return out;
}

std::vector<PathViolation> validate_path(const WalkLog& log, const CheckpointGrid& grid) {
  std::vector<PathViolation> out;
  int prev_id = -1;
  bool prev_known = false;
  for (const auto& tap : log.taps()) {
    const bool known = grid.contains(tap.checkpoint_id);
    if (!known) {
      out.push_back({PathViolation::Kind::UnknownCheckpoint, tap.checkpoint_id, -1,
                     tap.timestamp_ms});
    } else if (prev_known && prev_id != tap.checkpoint_id &&
               !grid.adjacent(prev_id, tap.checkpoint_id)) {
      out.push_back({PathViolation::Kind::NonAdjacentTransition, prev_id,
                     tap.checkpoint_id, tap.timestamp_ms});
    }
    prev_id = tap.checkpoint_id;
    prev_known = known;
  }
  return out;
}

std::vector<WalkLog> load_corpus(const std::string& directory) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".log")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<WalkLog> logs;
  logs.reserve(files.size());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    logs.push_back(parse_log(buf.str(), file.stem().string()));
  }
  return logs;
}

void write_corpus(const std::vector<WalkLog>& logs, const std::string& directory) {
  fs::create_directories(directory);
  for (const auto& log : logs) {
    std::ofstream out(fs::path(directory) / (log.path_id + ".log"), std::ios::binary);
    out << write_log(log);
  }
}

std::string corpus_fingerprint(const std::vector<WalkLog>& logs) {
  std::vector<const WalkLog*> sorted;
  sorted.reserve(logs.size());
  for (const auto& log : logs) sorted.push_back(&log);
  std::sort(sorted.begin(), sorted.end(),
            [](const WalkLog* a, const WalkLog* b) { return a->path_id < b->path_id; });
  Fnv1a hash;
  for (const WalkLog* log : sorted) {
    hash.update(log->path_id);
    hash.update("\x1f");
    hash.update(write_log(*log));
  }
  return hash.hex();
}

}  // namespace wifiloc
