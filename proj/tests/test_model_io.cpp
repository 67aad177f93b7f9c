#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wifiloc/gbm.hpp"
#include "wifiloc/model_io.hpp"
#include "wifiloc/nn.hpp"

using namespace wifiloc;
namespace fs = std::filesystem;

namespace {

std::vector<FeatureRow> random_rows(size_t n, size_t width, uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n);
  for (size_t i = 0; i < n; ++i) {
    rows[i].path_id = "p" + std::to_string(i % 8);
    rows[i].timestamp_ms = static_cast<int64_t>(i);
    rows[i].features.resize(width);
    for (auto& v : rows[i].features)
      v = rng.uniform01() < 0.25 ? kMissingRssi : std::floor(rng.uniform(-97, -31));
    rows[i].target = {rng.uniform(0, 20), rng.uniform(0, 20)};
  }
  return rows;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "wifiloc_model_io_test") {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void check_identical_predictions(const Regressor2D& a, const Regressor2D& b,
                                 size_t width) {
  const auto queries = random_rows(100, width, 999);
  for (const auto& q : queries) {
    const Point2 pa = a.predict(q.features);
    const Point2 pb = b.predict(q.features);
    CHECK(pa.x == pb.x);
    CHECK(pa.y == pb.y);
  }
}

}  // namespace

TEST_CASE("knn round-trips with identical predictions and metadata") {
  TempDir dir;
  const auto rows = random_rows(60, 10, 1);
  KnnModel model(5);
  model.fit(rows);
  const auto file = (dir.path / "knn.bin").string();
  save_model(model, file, {"fingerprint-123"});
  const auto loaded = load_model(file);
  CHECK(loaded.model->kind() == "knn");
  CHECK(loaded.meta.vocabulary_fingerprint == "fingerprint-123");
  check_identical_predictions(model, *loaded.model, 10);
}

TEST_CASE("gbm round-trips bit-identically") {
  TempDir dir;
  const auto rows = random_rows(80, 6, 2);
  GbmParams params;
  params.num_iterations = 30;
  params.learning_rate = 0.1;
  GbmModel model(params, 11);
  model.fit(rows);
  const auto file = (dir.path / "gbm.bin").string();
  save_model(model, file);
  const auto loaded = load_model(file);
  CHECK(loaded.model->kind() == "gbm");
  check_identical_predictions(model, *loaded.model, 6);
}

TEST_CASE("nn round-trips bit-identically") {
  TempDir dir;
  NnArchitecture arch;
  arch.input_width = 6;
  arch.dense1 = 8;
  arch.dense2 = 6;
  arch.lstm1 = 5;
  arch.lstm2 = 4;
  arch.lstm3 = 3;
  NnTrainConfig config;
  config.epochs = 3;
  config.batch_size = 16;
  NnModel model(arch, config, 5);
  model.fit(random_rows(50, 6, 5));
  const auto file = (dir.path / "nn.bin").string();
  save_model(model, file);
  const auto loaded = load_model(file);
  CHECK(loaded.model->kind() == "nn");
  check_identical_predictions(model, *loaded.model, 6);
}

TEST_CASE("ensembles round-trip with nested components") {
  TempDir dir;
  const auto rows = random_rows(60, 5, 3);
  auto gbm = std::make_shared<GbmModel>(
      [] {
        GbmParams params;
        params.num_iterations = 10;
        params.learning_rate = 0.2;
        return params;
      }(),
      7);
  auto knn = std::make_shared<KnnModel>(7);
  EnsembleModel ensemble;
  ensemble.add(gbm, 2.0);
  ensemble.add(knn, 1.0);
  ensemble.fit(rows);
  const auto file = (dir.path / "ensemble.bin").string();
  save_model(ensemble, file);
  const auto loaded = load_model(file);
  CHECK(loaded.model->kind() == "ensemble");
  check_identical_predictions(ensemble, *loaded.model, 5);
}

TEST_CASE("constant model round-trips") {
  TempDir dir;
  ConstantModel model;
  model.fit(random_rows(10, 4, 6));
  const auto file = (dir.path / "constant.bin").string();
  save_model(model, file);
  const auto loaded = load_model(file);
  check_identical_predictions(model, *loaded.model, 4);
}

TEST_CASE("truncated files are rejected as corrupt") {
  TempDir dir;
  KnnModel model(3);
  model.fit(random_rows(20, 4, 7));
  const auto file = (dir.path / "model.bin").string();
  save_model(model, file);
  const auto size = fs::file_size(file);
  fs::resize_file(file, size / 2);
  CHECK_THROWS_AS(load_model(file), CorruptFile);
  fs::resize_file(file, 4);
  CHECK_THROWS_AS(load_model(file), CorruptFile);
}

TEST_CASE("wrong magic and unsupported versions are distinct failures") {
  TempDir dir;
  const auto garbage = (dir.path / "garbage.bin").string();
  {
    std::ofstream out(garbage, std::ios::binary);
    out << "NOTAMODELFILE";
  }
  CHECK_THROWS_AS(load_model(garbage), CorruptFile);

  KnnModel model(3);
  model.fit(random_rows(20, 4, 8));
  const auto file = (dir.path / "versioned.bin").string();
  save_model(model, file);
  {
    std::fstream patch(file, std::ios::in | std::ios::out | std::ios::binary);
    patch.seekp(7);
    patch.put('9');  // future container version
  }
  CHECK_THROWS_AS(load_model(file), VersionMismatch);
  CHECK_THROWS_AS(load_model((dir.path / "missing.bin").string()), CorruptFile);
}
