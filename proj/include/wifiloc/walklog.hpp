#pragma once
// Raw acquisition log format: one UTF-8 text file per walked path, line
// grammar `<timestamp_ms> TYPE_<KIND> <payload...>`. Parsing is lossless;
// write_log(parse_log(text)) is byte-stable.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wifiloc {

struct CheckpointGrid;

enum class SensorKind { Gyroscope, RotationVector, Accelerometer, MagneticField };

const char* sensor_kind_token(SensorKind kind);  // e.g. "TYPE_GYROSCOPE"

struct SensorSample {
  int64_t timestamp_ms = 0;
  SensorKind kind = SensorKind::Gyroscope;
  std::array<double, 3> values{};
  int status = 0;
};

struct WifiObservation {
  int64_t timestamp_ms = 0;
  std::string bssid;  // 6 colon-separated hex octets, lowercase
  std::string ssid;   // may contain spaces, may be empty
  int rssi_dbm = 0;
  int frequency_mhz = 0;
};

struct CheckpointTap {
  int64_t timestamp_ms = 0;
  int checkpoint_id = 0;
};

using LogRecord = std::variant<SensorSample, WifiObservation, CheckpointTap>;

int64_t record_timestamp(const LogRecord& r);

struct ParseWarning {
  enum class Kind { UnknownRecordType, OutOfOrderTimestamps };
  Kind kind;
  size_t line_no = 0;  // 1-based; 0 for file-level warnings
  std::string detail;
};

struct WalkLog {
  std::string path_id;
  std::vector<LogRecord> records;  // non-decreasing timestamps (stable order)
  std::vector<ParseWarning> warnings;

  size_t tap_count() const;
  std::vector<CheckpointTap> taps() const;
};

struct MalformedLine : std::runtime_error {
  size_t line_no;
  MalformedLine(size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

struct EmptyLog : std::runtime_error {
  explicit EmptyLog(const std::string& path_id)
      : std::runtime_error("no records parsed from log '" + path_id + "'") {}
};

// Parses full file contents. Every well-formed line becomes exactly one
// record; unknown TYPE_ tokens become warnings; records are stable-sorted by
// timestamp (out-of-order input earns a warning rather than a rejection,
// crowd-sensed files are messy).
WalkLog parse_log(std::string_view text, const std::string& path_id);

// Canonical text form: space-separated fields, lowercase MACs, shortest
// round-trip floats, trailing newline.
std::string write_log(const WalkLog& log);

bool is_valid_bssid(std::string_view s);

struct PathViolation {
  enum class Kind { UnknownCheckpoint, NonAdjacentTransition };
  Kind kind;
  int checkpoint_a = -1;  // the offending tap (UnknownCheckpoint) or pair
  int checkpoint_b = -1;
  int64_t timestamp_ms = 0;
};

// One violation per tap on an id the grid does not know, plus one per
// consecutive tap pair that is not an edge of the grid. Self-transitions are
// legal. Violations are data, not failures.
std::vector<PathViolation> validate_path(const WalkLog& log, const CheckpointGrid& grid);

// Directory corpus helpers: each *.log file is one path, path_id = file stem.
std::vector<WalkLog> load_corpus(const std::string& directory);
void write_corpus(const std::vector<WalkLog>& logs, const std::string& directory);

// Stable content hash over (path_id, canonical text), order-independent.
std::string corpus_fingerprint(const std::vector<WalkLog>& logs);

}  // namespace wifiloc
