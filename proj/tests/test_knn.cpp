#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "wifiloc/models.hpp"

using namespace wifiloc;

namespace {

std::vector<FeatureRow> random_rows(size_t n, size_t width, uint64_t seed,
                                    double sentinel_rate = 0.3) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n);
  for (size_t i = 0; i < n; ++i) {
    rows[i].path_id = "r" + std::to_string(i);
    rows[i].timestamp_ms = static_cast<int64_t>(i);
    rows[i].checkpoint_id = static_cast<int>(i);
    rows[i].target = {rng.uniform(0, 25), rng.uniform(0, 25)};
    rows[i].features.resize(width);
    for (auto& v : rows[i].features)
      v = rng.uniform01() < sentinel_rate ? kMissingRssi
                                          : std::floor(rng.uniform(-97, -31));
  }
  return rows;
}

// Independent oracle: full pairwise distances, stable full sort, mean target.
Point2 oracle_predict(const std::vector<FeatureRow>& rows,
                      const std::vector<double>& query, int k) {
  std::vector<double> dist(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < query.size(); ++j) {
      const double d = query[j] - rows[i].features[j];
      acc += d * d;
    }
    dist[i] = acc;
  }
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return dist[a] < dist[b]; });
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < k; ++i) {
    sx += rows[order[static_cast<size_t>(i)]].target.x;
    sy += rows[order[static_cast<size_t>(i)]].target.y;
  }
  return {sx / k, sy / k};
}

}  // namespace

TEST_CASE("k=1 on a training vector returns that row's target exactly") {
  const auto rows = random_rows(20, 8, 3);
  KnnModel model(1);
  model.fit(rows);
  for (const auto& row : rows) {
    const Point2 p = model.predict(row.features);
    CHECK(p.x == row.target.x);
    CHECK(p.y == row.target.y);
  }
}

TEST_CASE("k equal to the row count returns the target centroid") {
  const auto rows = random_rows(17, 6, 4);
  KnnModel model(17);
  model.fit(rows);
  double sx = 0.0, sy = 0.0;
  for (const auto& row : rows) {
    sx += row.target.x;
    sy += row.target.y;
  }
  const Point2 p = model.predict(rows[0].features);
  CHECK(p.x == doctest::Approx(sx / 17).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(sy / 17).epsilon(1e-15));
}

TEST_CASE("k larger than the training set is an error") {
  const auto rows = random_rows(10, 4, 5);
  KnnModel model(11);
  model.fit(rows);
  CHECK_THROWS_AS(model.predict(rows[0].features), KTooLarge);
  CHECK_THROWS_AS(KnnModel(0), ModelError);
}

TEST_CASE("ties at the k-th distance keep training-row order") {
  // rows 1 and 2 tie at the k-th distance; the earlier training row wins
  std::vector<FeatureRow> rows(4);
  for (size_t i = 0; i < 4; ++i) rows[i].path_id = "r" + std::to_string(i);
  rows[0].features = {0.0, 0.0};
  rows[0].target = {1, 1};
  rows[1].features = {1.0, 0.0};
  rows[1].target = {10, 10};
  rows[2].features = {0.0, 1.0};
  rows[2].target = {20, 20};
  rows[3].features = {5.0, 5.0};
  rows[3].target = {99, 99};
  KnnModel model(2);
  model.fit(rows);
  const Point2 p = model.predict(std::vector<double>{0.0, 0.0});
  CHECK(p.x == doctest::Approx((1 + 10) / 2.0));
}

TEST_CASE("matches the exhaustive oracle exactly: 200 rows, 50 queries, k=45") {
  const auto rows = random_rows(200, 30, 7);
  const auto queries = random_rows(50, 30, 8);
  KnnModel model(45);
  model.fit(rows);
  for (const auto& q : queries) {
    const Point2 got = model.predict(q.features);
    const Point2 want = oracle_predict(rows, q.features, 45);
    CHECK(got.x == want.x);  // bitwise: same distances, computed in the same precision
    CHECK(got.y == want.y);
  }
}

TEST_CASE("feature width is enforced and unfitted predict rejects") {
  const auto rows = random_rows(10, 6, 9);
  KnnModel model(3);
  model.fit(rows);
  CHECK_THROWS_AS(model.predict(std::vector<double>{1.0, 2.0}), ModelError);
  CHECK_THROWS_AS(KnnModel(3).predict(rows[0].features), NotFitted);
  CHECK_THROWS_AS(KnnModel(3).fit({}), ModelError);
}
