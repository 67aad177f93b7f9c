#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "wifiloc/nn.hpp"

using namespace wifiloc;

namespace {

NnArchitecture miniature() {
  NnArchitecture arch;
  arch.input_width = 5;
  arch.dense1 = 7;
  arch.dense2 = 6;
  arch.lstm1 = 5;
  arch.lstm2 = 4;
  arch.lstm3 = 3;
  return arch;
}

std::vector<FeatureRow> grid_rows(size_t n, size_t width, uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n);
  for (size_t i = 0; i < n; ++i) {
    rows[i].path_id = "p" + std::to_string(i % 10);
    rows[i].features.resize(width);
    for (auto& v : rows[i].features)
      v = rng.uniform01() < 0.2 ? kMissingRssi : rng.uniform(-97, -31);
    // target is a smooth function of the first two features
    rows[i].target = {(rows[i].features[0] + 100.0) * 0.2,
                      (rows[i].features[1 % width] + 100.0) * 0.15};
  }
  return rows;
}

}  // namespace

TEST_CASE("default stack parameter counts for a 312-wide input") {
  NnModel model({}, {}, 1);
  std::map<std::string, size_t> counts;
  for (const auto& layer : model.parameter_counts()) counts[layer.name] = layer.params;
  CHECK(counts.at("dn1") == 80128);
  CHECK(counts.at("bn2") == 1024);
  CHECK(counts.at("do2") == 0);
  CHECK(counts.at("dn2") == 65792);
  CHECK(counts.at("resh") == 0);
  CHECK(counts.at("bn3") == 1024);
  CHECK(counts.at("lstm1") == 197120);
  CHECK(counts.at("bn4") == 512);
  CHECK(counts.at("lstm2") == 49408);
  CHECK(counts.at("bn5") == 256);
  CHECK(counts.at("lstm3") == 12416);
  CHECK(counts.at("bn6") == 128);
  CHECK(counts.at("xy") == 66);
  // the input normalization layer the totals require
  CHECK(counts.at("bn1") == 1248);
  CHECK(model.total_parameters() == 409122);
  CHECK(model.trainable_parameters() == 407026);
  CHECK(model.non_trainable_parameters() == 2096);
}

TEST_CASE("tensor shapes agree with the declared counts") {
  NnModel model(miniature(), {}, 3);
  size_t from_views = 0;
  auto& params = model.params();
  for (const auto& view : nn::trainable_tensors(params)) from_views += view.size;
  CHECK(from_views == model.trainable_parameters());
}

TEST_CASE("analytic gradients match central finite differences") {
  NnModel model(miniature(), {}, 12345);
  const Eigen::Index batch = 3;
  Rng rng(777);

  Eigen::MatrixXd x(batch, 5);
  Eigen::MatrixXd y(batch, 2);
  for (Eigen::Index i = 0; i < batch; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    y(i, 0) = rng.uniform(0.0, 10.0);
    y(i, 1) = rng.uniform(0.0, 10.0);
  }
  const auto masks = model.sample_masks(batch, rng);

  nn::Params grads = model.params();
  for (auto& view : nn::trainable_tensors(grads))
    std::fill(view.data, view.data + view.size, 0.0);
  model.training_loss_and_gradients(x, y, masks, grads);

  // Relative error where the gradient has meaningful magnitude; elements
  // where both sides sit at the finite-difference noise floor are compared
  // absolutely instead.
  const double eps = 1e-5;
  double max_rel = 0.0;
  double max_abs_small = 0.0;
  std::string worst;
  auto param_views = nn::trainable_tensors(model.params());
  auto grad_views = nn::trainable_tensors(grads);
  for (size_t t = 0; t < param_views.size(); ++t) {
    for (size_t k = 0; k < param_views[t].size; ++k) {
      double& p = param_views[t].data[k];
      const double original = p;
      p = original + eps;
      const double up = model.training_loss(x, y, masks);
      p = original - eps;
      const double down = model.training_loss(x, y, masks);
      p = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grad_views[t].data[k];
      const double denom = std::max(std::abs(numeric), std::abs(analytic));
      if (denom < 1e-4) {
        max_abs_small = std::max(max_abs_small, std::abs(numeric - analytic));
        continue;
      }
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > max_rel) {
        max_rel = rel;
        worst = param_views[t].name + "[" + std::to_string(k) + "]";
      }
    }
  }
  INFO("worst tensor element: " << worst);
  CHECK(max_rel < 1e-4);
  CHECK(max_abs_small < 1e-8);
}

TEST_CASE("recurrent kernels receive exactly zero gradient from one timestep") {
  NnModel model(miniature(), {}, 5);
  Rng rng(6);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(4, 2);
  const auto masks = model.sample_masks(4, rng);
  nn::Params grads = model.params();
  for (auto& view : nn::trainable_tensors(grads))
    std::fill(view.data, view.data + view.size, 0.0);
  model.training_loss_and_gradients(x, y, masks, grads);
  CHECK(grads.lstm1.w_recurrent.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.lstm2.w_recurrent.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.lstm3.w_recurrent.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero-epoch training yields finite predictions") {
  NnTrainConfig config;
  config.epochs = 0;
  NnModel model(miniature(), config, 9);
  const auto rows = grid_rows(30, 5, 9);
  model.fit(rows);
  const Point2 p = model.predict(rows[0].features);
  CHECK(std::isfinite(p.x));
  CHECK(std::isfinite(p.y));
}

TEST_CASE("input mapping sends the sentinel to zero and -30 dBm to one") {
  NnModel model(miniature(), {}, 2);
  std::vector<FeatureRow> rows(1);
  rows[0].features = {kMissingRssi, -30.0, -100.0, -999.0, -64.5};
  const auto x = model.map_inputs(rows);
  CHECK(x(0, 0) == 0.0);
  CHECK(x(0, 1) == doctest::Approx(1.0));
  CHECK(x(0, 2) == doctest::Approx(899.0 / 969.0));
  CHECK(x(0, 3) == 0.0);
}

TEST_CASE("training reduces the loss on a learnable miniature problem") {
  NnTrainConfig config;
  config.epochs = 25;
  config.batch_size = 32;
  config.validation_fraction = 0.15;
  NnModel model(miniature(), config, 21);
  const auto rows = grid_rows(300, 5, 21);
  model.fit(rows);
  const auto& losses = model.epoch_train_loss();
  REQUIRE(losses.size() >= 2);
  CHECK(losses.back() < losses.front());
  for (const auto& row : rows) {
    const Point2 p = model.predict(row.features);
    CHECK(std::isfinite(p.x));
    CHECK(std::isfinite(p.y));
  }
}

TEST_CASE("an absurd learning rate raises the divergence error") {
  // the first optimizer step throws parameters to ~1e200; the next forward
  // squares that through consecutive scale layers and overflows
  NnTrainConfig config;
  config.epochs = 4;
  config.batch_size = 16;
  config.learning_rate = 1e200;
  config.validation_fraction = 0.0;
  NnModel model(miniature(), config, 31);
  const auto rows = grid_rows(64, 5, 31);
  CHECK_THROWS_AS(model.fit(rows), NonFiniteLoss);
}

TEST_CASE("config and architecture validation") {
  NnArchitecture arch = miniature();
  arch.dropout1 = 1.0;
  CHECK_THROWS_AS(NnModel(arch, {}, 1), InvalidConfig);
  arch = miniature();
  arch.lstm2 = 0;
  CHECK_THROWS_AS(NnModel(arch, {}, 1), InvalidConfig);
  NnTrainConfig config;
  config.batch_size = 0;
  CHECK_THROWS_AS(NnModel(miniature(), config, 1), InvalidConfig);
  config = {};
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(NnModel(miniature(), config, 1), InvalidConfig);
  CHECK_THROWS_AS(NnModel(miniature(), {}, 1).predict(std::vector<double>(5, -50.0)),
                  NotFitted);
}
