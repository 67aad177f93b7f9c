#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wifiloc/synthgen.hpp"
#include "wifiloc/walklog.hpp"

using namespace wifiloc;

namespace {

const char* kSnippet =
    "1633437600157 TYPE_GYROSCOPE 0.118198946 -0.20234315 -6.8720314E-4 3\n"
    "1633437600157 TYPE_ROTATION_VECTOR 0.103371434 -0.13861331 -0.6763132 3\n"
    "1633437600157 TYPE_ACCELEROMETER 1.1192428 3.6858442 9.081061 3\n"
    "1633437600157 TYPE_MAGNETIC_FIELD -23.6625 22.96875 165.76875 0\n"
    "1633437608241 TYPE_CHECKPOINT 12\n"
    "1633437608615 TYPE_WIFI f4:db:e6:aa:bb:cc SSID1 -57 5620\n"
    "1633437608615 TYPE_WIFI f4:db:e6:aa:bb:dd SSID2 -57 5620\n"
    "1633437611901 TYPE_CHECKPOINT 13\n";

}  // namespace

TEST_CASE("checkpoint line parses to a tap") {
  const auto log = parse_log("1633437608241 TYPE_CHECKPOINT 12\n", "p");
  REQUIRE(log.records.size() == 1);
  const auto& tap = std::get<CheckpointTap>(log.records[0]);
  CHECK(tap.timestamp_ms == 1633437608241);
  CHECK(tap.checkpoint_id == 12);
}

TEST_CASE("wifi line parses fields from both ends") {
  const auto log =
      parse_log("1633437608615 TYPE_WIFI f4:db:e6:aa:bb:cc SSID1 -57 5620\n", "p");
  const auto& obs = std::get<WifiObservation>(log.records.at(0));
  CHECK(obs.timestamp_ms == 1633437608615);
  CHECK(obs.bssid == "f4:db:e6:aa:bb:cc");
  CHECK(obs.ssid == "SSID1");
  CHECK(obs.rssi_dbm == -57);
  CHECK(obs.frequency_mhz == 5620);
}

TEST_CASE("ssid with spaces is the middle remainder") {
  const auto log =
      parse_log("1 TYPE_WIFI f4:db:e6:aa:bb:cc Johns iPhone Hotspot -70 2412\n", "p");
  const auto& obs = std::get<WifiObservation>(log.records.at(0));
  CHECK(obs.ssid == "Johns iPhone Hotspot");
  CHECK(obs.rssi_dbm == -70);
}

TEST_CASE("empty ssid survives a round trip") {
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(WifiObservation{5, "aa:bb:cc:dd:ee:ff", "", -44, 2412});
  const auto text = write_log(log);
  const auto parsed = parse_log(text, "p");
  const auto& obs = std::get<WifiObservation>(parsed.records.at(0));
  CHECK(obs.ssid.empty());
  CHECK(write_log(parsed) == text);
}

TEST_CASE("bssid is lowercase-normalized and validated") {
  const auto log = parse_log("1 TYPE_WIFI F4:DB:E6:AA:BB:CC net -57 5620\n", "p");
  CHECK(std::get<WifiObservation>(log.records.at(0)).bssid == "f4:db:e6:aa:bb:cc");
  CHECK_THROWS_AS(parse_log("1 TYPE_WIFI not-a-mac net -57 5620\n", "p"), MalformedLine);
}

TEST_CASE("empty input is an error") {
  CHECK_THROWS_AS(parse_log("", "p"), EmptyLog);
  CHECK_THROWS_AS(parse_log("\n\n", "p"), EmptyLog);
}

TEST_CASE("malformed lines carry the line number") {
  try {
    parse_log("1 TYPE_CHECKPOINT 3\n1 TYPE_GYROSCOPE 0.1 0.2\n", "p");
    FAIL("expected MalformedLine");
  } catch (const MalformedLine& e) {
    CHECK(e.line_no == 2);
  }
  // four-component sensor payloads are rejected, not truncated
  CHECK_THROWS_AS(parse_log("1 TYPE_ROTATION_VECTOR 0.1 0.2 0.3 0.4 3\n", "p"),
                  MalformedLine);
  CHECK_THROWS_AS(parse_log("1 TYPE_CHECKPOINT -4\n", "p"), MalformedLine);
  CHECK_THROWS_AS(parse_log("1 TYPE_WIFI aa:bb:cc:dd:ee:ff x -1234 5620\n", "p"),
                  MalformedLine);
}

TEST_CASE("unknown record types become warnings, not records") {
  const auto log = parse_log("1 TYPE_CHECKPOINT 3\n2 TYPE_PRESSURE 101.3 0 0 3\n", "p");
  CHECK(log.records.size() == 1);
  REQUIRE(log.warnings.size() == 1);
  CHECK(log.warnings[0].kind == ParseWarning::Kind::UnknownRecordType);
  CHECK(log.warnings[0].line_no == 2);
}

TEST_CASE("count preservation: well-formed lines = records + line warnings") {
  const std::string text = std::string(kSnippet) + "9999999999999 TYPE_FUTURE x y\n";
  const auto log = parse_log(text, "p");
  size_t line_warnings = 0;
  for (const auto& w : log.warnings)
    if (w.line_no > 0) ++line_warnings;
  CHECK(log.records.size() + line_warnings == 9);
}

TEST_CASE("out-of-order timestamps are stable-sorted with a warning") {
  const auto log = parse_log(
      "200 TYPE_CHECKPOINT 2\n100 TYPE_CHECKPOINT 1\n200 TYPE_CHECKPOINT 3\n", "p");
  REQUIRE(log.records.size() == 3);
  CHECK(std::get<CheckpointTap>(log.records[0]).checkpoint_id == 1);
  // equal timestamps keep input order
  CHECK(std::get<CheckpointTap>(log.records[1]).checkpoint_id == 2);
  CHECK(std::get<CheckpointTap>(log.records[2]).checkpoint_id == 3);
  REQUIRE(log.warnings.size() == 1);
  CHECK(log.warnings[0].kind == ParseWarning::Kind::OutOfOrderTimestamps);
}

TEST_CASE("snippet parses losslessly and round-trips") {
  const auto log = parse_log(kSnippet, "p");
  CHECK(log.records.size() == 8);
  CHECK(log.warnings.empty());
  const auto text = write_log(log);
  const auto reparsed = parse_log(text, "p");
  CHECK(write_log(reparsed) == text);
  REQUIRE(reparsed.records.size() == log.records.size());
  const auto& gyro = std::get<SensorSample>(reparsed.records[0]);
  CHECK(gyro.kind == SensorKind::Gyroscope);
  CHECK(gyro.values[2] == doctest::Approx(-6.8720314e-4).epsilon(1e-12));
  CHECK(gyro.status == 3);
}

TEST_CASE("synthetic campaign logs round-trip byte-exactly with zero warnings") {
  const auto grid = generate_building(4, 4, 2.5);
  RadioEnvironment env;
  env.aps = generate_aps(grid, 12, 7);
  CampaignConfig config;
  config.n_paths = 10;
  config.seed = 7;
  config.sensor_period_ms = 500;
  const auto campaign = generate_campaign(env, grid, config);
  REQUIRE(campaign.logs.size() == 10);
  for (const auto& log : campaign.logs) {
    const auto text = write_log(log);
    const auto parsed = parse_log(text, log.path_id);
    CHECK(parsed.warnings.empty());
    CHECK(write_log(parsed) == text);
    REQUIRE(parsed.records.size() == log.records.size());
  }
}

TEST_CASE("validate_path flags unknown ids and non-adjacent transitions") {
  const auto grid = generate_building(3, 3, 2.0);  // ids 0..8 row-major
  WalkLog log;
  log.path_id = "p";
  log.records.emplace_back(CheckpointTap{1, 0});
  log.records.emplace_back(CheckpointTap{2, 1});   // adjacent
  log.records.emplace_back(CheckpointTap{3, 1});   // self-transition: legal
  log.records.emplace_back(CheckpointTap{4, 8});   // 1 -> 8 is not an edge
  log.records.emplace_back(CheckpointTap{5, 99});  // unknown
  const auto violations = validate_path(log, grid);
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].kind == PathViolation::Kind::NonAdjacentTransition);
  CHECK(violations[0].checkpoint_a == 1);
  CHECK(violations[0].checkpoint_b == 8);
  CHECK(violations[1].kind == PathViolation::Kind::UnknownCheckpoint);
  CHECK(violations[1].checkpoint_a == 99);
}

TEST_CASE("validate_path accepts the snippet transition 12 -> 13") {
  CheckpointGrid grid;
  grid.points = {{12, {2.5, 0.0}}, {13, {5.0, 0.0}}};
  grid.add_edge(12, 13);
  const auto log = parse_log(kSnippet, "p");
  CHECK(validate_path(log, grid).empty());
}

TEST_CASE("corpus fingerprint ignores log order, tracks content") {
  WalkLog a = parse_log("1 TYPE_CHECKPOINT 1\n", "a");
  WalkLog b = parse_log("2 TYPE_CHECKPOINT 2\n", "b");
  const auto fp1 = corpus_fingerprint({a, b});
  const auto fp2 = corpus_fingerprint({b, a});
  CHECK(fp1 == fp2);
  b.records.emplace_back(CheckpointTap{3, 3});
  CHECK(corpus_fingerprint({a, b}) != fp1);
}
