#pragma once
// Gradient-boosted regression trees, histogram-binned, leaf-wise growth with
// best-gain priority, L2 objective. Two independent single-output boosters
// cover the (x, y) target. Row and feature subsampling are seed-controlled
// and keyed to canonical row identity, so permuting training-row order
// reproduces the identical model.

#include <cstdint>
#include <vector>

#include "wifiloc/models.hpp"

namespace wifiloc {

struct GbmParams {
  double learning_rate = 0.005;
  double feature_fraction = 0.9;
  double bagging_fraction = 0.7;
  int bagging_freq = 10;
  int max_depth = 8;
  int num_leaves = 128;
  int max_bin = 512;
  int num_iterations = 500;  // desk-scale default; the reference budget is 15000
  int min_data_in_leaf = 1;
  double min_split_gain = 1e-12;
};

struct InvalidParams : ModelError {
  explicit InvalidParams(const std::string& what) : ModelError("gbm params: " + what) {}
};

struct GbmNode {
  int feature = -1;       // -1 marks a leaf
  double threshold = 0.0; // go left when value <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;     // leaf output (mean residual)
};

struct GbmTree {
  std::vector<GbmNode> nodes;  // nodes[0] is the root
  double predict(std::span<const double> features) const;
};

struct GbmBooster {
  double base = 0.0;
  std::vector<GbmTree> trees;
};

class GbmModel final : public Regressor2D {
 public:
  explicit GbmModel(GbmParams params = {}, uint64_t seed = 1);

  void fit(const std::vector<FeatureRow>& rows) override;
  Point2 predict(std::span<const double> features) const override;
  std::string kind() const override { return "gbm"; }
  size_t input_width() const override { return width_; }

  const GbmParams& params() const { return params_; }
  uint64_t seed() const { return seed_; }

  struct IterationMetrics {
    double l1_x, l2_x, l1_y, l2_y;  // training metrics after each iteration
  };
  const std::vector<IterationMetrics>& training_metrics() const { return metrics_; }

  const GbmBooster& booster_x() const { return booster_x_; }
  const GbmBooster& booster_y() const { return booster_y_; }
  void restore(GbmParams params, uint64_t seed, size_t width, GbmBooster bx, GbmBooster by);

 private:
  GbmParams params_;
  uint64_t seed_;
  size_t width_ = 0;
  GbmBooster booster_x_;
  GbmBooster booster_y_;
  std::vector<IterationMetrics> metrics_;
  bool fitted_ = false;
};

void validate_params(const GbmParams& params);

}  // namespace wifiloc
