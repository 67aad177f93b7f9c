#include <algorithm>
#include <numeric>

#include "wifiloc/models.hpp"

namespace wifiloc {

std::vector<Point2> predict_rows(const Regressor2D& model,
                                 const std::vector<FeatureRow>& rows) {
  std::vector<Point2> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(model.predict(row.features));
  return out;
}

void KnnModel::fit(const std::vector<FeatureRow>& rows) {
  if (rows.empty()) throw ModelError("knn: no training rows");
  features_.clear();
  targets_.clear();
  features_.reserve(rows.size());
  targets_.reserve(rows.size());
  width_ = rows.front().features.size();
  for (const auto& row : rows) {
    if (row.features.size() != width_) throw ModelError("knn: ragged feature widths");
    features_.push_back(row.features);
    targets_.push_back(row.target);
  }
}

void KnnModel::restore(int k, std::vector<std::vector<double>> features,
                       std::vector<Point2> targets) {
  k_ = k;
  features_ = std::move(features);
  targets_ = std::move(targets);
  width_ = features_.empty() ? 0 : features_.front().size();
}

Point2 KnnModel::predict(std::span<const double> features) const {
  if (features_.empty()) throw NotFitted();
  check_width(features.size());
  if (static_cast<size_t>(k_) > features_.size()) throw KTooLarge(k_, features_.size());

  const size_t n = features_.size();
  std::vector<double> dist(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& train = features_[i];
    double acc = 0.0;
    for (size_t j = 0; j < train.size(); ++j) {
      const double d = features[j] - train[j];
      acc += d * d;
    }
    dist[i] = acc;
  }

  // Stable selection keeps training-row order on ties at the k-th distance.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&dist](size_t a, size_t b) { return dist[a] < dist[b]; });

  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < k_; ++i) {
    const Point2& t = targets_[order[static_cast<size_t>(i)]];
    sx += t.x;
    sy += t.y;
  }
  return {sx / k_, sy / k_};
}

}  // namespace wifiloc
