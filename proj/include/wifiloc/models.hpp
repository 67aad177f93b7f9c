#pragma once
// Common fit/predict contract for the position regressors, plus the k-NN
// model, the weighted ensemble and a constant-centroid baseline.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wifiloc/common.hpp"
#include "wifiloc/dataset.hpp"

namespace wifiloc {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotFitted : ModelError {
  NotFitted() : ModelError("model has not been fitted") {}
};
struct KTooLarge : ModelError {
  KTooLarge(int k, size_t rows)
      : ModelError("k=" + std::to_string(k) + " exceeds " + std::to_string(rows) +
                   " training rows") {}
};
struct ZeroWeightSum : ModelError {
  ZeroWeightSum() : ModelError("ensemble weights sum to zero") {}
};

class Regressor2D {
 public:
  virtual ~Regressor2D() = default;
  virtual void fit(const std::vector<FeatureRow>& rows) = 0;
  virtual Point2 predict(std::span<const double> features) const = 0;
  virtual std::string kind() const = 0;
  virtual size_t input_width() const = 0;

 protected:
  void check_width(size_t got) const {
    if (got != input_width())
      throw ModelError("feature vector width " + std::to_string(got) +
                       " does not match trained width " + std::to_string(input_width()));
  }
};

std::vector<Point2> predict_rows(const Regressor2D& model,
                                 const std::vector<FeatureRow>& rows);

// ---------------------------------------------------------------------------

// Brute-force exact k nearest neighbors over the raw feature vectors
// (sentinels included); prediction is the unweighted mean target of the k
// nearest rows, ties at the k-th distance broken by training-row order.
class KnnModel final : public Regressor2D {
 public:
  explicit KnnModel(int k = 45) : k_(k) {
    if (k < 1) throw ModelError("k must be positive");
  }

  void fit(const std::vector<FeatureRow>& rows) override;
  Point2 predict(std::span<const double> features) const override;
  std::string kind() const override { return "knn"; }
  size_t input_width() const override { return width_; }

  int k() const { return k_; }
  const std::vector<std::vector<double>>& train_features() const { return features_; }
  const std::vector<Point2>& train_targets() const { return targets_; }

  // serialization hooks
  void restore(int k, std::vector<std::vector<double>> features, std::vector<Point2> targets);

 private:
  int k_;
  size_t width_ = 0;
  std::vector<std::vector<double>> features_;
  std::vector<Point2> targets_;
};

// ---------------------------------------------------------------------------

// Coordinate-wise weighted mean of already-constructed component models.
// fit() fans out to every component.
class EnsembleModel final : public Regressor2D {
 public:
  EnsembleModel() = default;

  void add(std::shared_ptr<Regressor2D> model, double weight);
  void fit(const std::vector<FeatureRow>& rows) override;
  Point2 predict(std::span<const double> features) const override;
  std::string kind() const override { return "ensemble"; }
  size_t input_width() const override;

  size_t component_count() const { return components_.size(); }
  const std::shared_ptr<Regressor2D>& component(size_t i) const {
    return components_.at(i).model;
  }
  double weight(size_t i) const { return components_.at(i).weight; }

 private:
  struct Entry {
    std::shared_ptr<Regressor2D> model;
    double weight;
  };
  std::vector<Entry> components_;
};

Point2 ensemble_predict(const std::vector<std::pair<const Regressor2D*, double>>& models,
                        std::span<const double> features);

// ---------------------------------------------------------------------------

// Predicts the training-target centroid everywhere; the no-information
// baseline the learned models are measured against.
class ConstantModel final : public Regressor2D {
 public:
  void fit(const std::vector<FeatureRow>& rows) override;
  Point2 predict(std::span<const double> features) const override;
  std::string kind() const override { return "constant"; }
  size_t input_width() const override { return width_; }

  void restore(size_t width, Point2 mean) {
    width_ = width;
    mean_ = mean;
    fitted_ = true;
  }
  Point2 mean() const { return mean_; }

 private:
  size_t width_ = 0;
  Point2 mean_;
  bool fitted_ = false;
};

}  // namespace wifiloc
