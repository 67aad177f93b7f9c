#include "wifiloc/models.hpp"

namespace wifiloc {

void EnsembleModel::add(std::shared_ptr<Regressor2D> model, double weight) {
  if (weight < 0.0) throw ModelError("ensemble: negative weight");
  components_.push_back({std::move(model), weight});
}

void EnsembleModel::fit(const std::vector<FeatureRow>& rows) {
  if (components_.empty()) throw ModelError("ensemble: no components");
  for (auto& entry : components_) entry.model->fit(rows);
}

size_t EnsembleModel::input_width() const {
  return components_.empty() ? 0 : components_.front().model->input_width();
}

Point2 EnsembleModel::predict(std::span<const double> features) const {
  std::vector<std::pair<const Regressor2D*, double>> refs;
  refs.reserve(components_.size());
  for (const auto& entry : components_) refs.push_back({entry.model.get(), entry.weight});
  return ensemble_predict(refs, features);
}

Point2 ensemble_predict(const std::vector<std::pair<const Regressor2D*, double>>& models,
                        std::span<const double> features) {
  double weight_sum = 0.0;
  for (const auto& [model, weight] : models) weight_sum += weight;
  if (weight_sum <= 0.0) throw ZeroWeightSum();
  Point2 acc{0.0, 0.0};
  for (const auto& [model, weight] : models) {
    if (weight == 0.0) continue;
    const Point2 p = model->predict(features);
    acc.x += weight * p.x;
    acc.y += weight * p.y;
  }
  return {acc.x / weight_sum, acc.y / weight_sum};
}

void ConstantModel::fit(const std::vector<FeatureRow>& rows) {
  if (rows.empty()) throw ModelError("constant: no training rows");
  width_ = rows.front().features.size();
  double sx = 0.0, sy = 0.0;
  for (const auto& row : rows) {
    sx += row.target.x;
    sy += row.target.y;
  }
  mean_ = {sx / static_cast<double>(rows.size()), sy / static_cast<double>(rows.size())};
  fitted_ = true;
}

Point2 ConstantModel::predict(std::span<const double> features) const {
  if (!fitted_) throw NotFitted();
  check_width(features.size());
  return mean_;
}

}  // namespace wifiloc
