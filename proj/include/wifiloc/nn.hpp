#pragma once
// Recurrent regression network: an input BatchNorm, two ReLU dense blocks,
// three stacked single-step LSTM cells with interleaved BatchNorm/Dropout,
// and a linear (x, y) head. Forward, backward and the adaptive-moment
// optimizer are implemented here in double precision; recurrent cells see a
// length-1 sequence, so each is one gated-cell application from zero state.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "wifiloc/models.hpp"

namespace wifiloc {

struct NnArchitecture {
  int input_width = 312;
  int dense1 = 256;
  int dense2 = 256;
  int lstm1 = 128;
  int lstm2 = 64;
  int lstm3 = 32;
  double dropout1 = 0.3;  // after the first dense block
  double dropout2 = 0.2;  // after the first recurrent cell
  double dropout3 = 0.1;  // after the second recurrent cell
};

struct NnTrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 40;
  double validation_fraction = 0.1;
  int early_stop_patience = 8;
  // Affine input map: sentinel (-999) lands on 0, the usable dBm range lands
  // in (0, 1]. Raw sentinel magnitudes destabilize training.
  double input_offset = -999.0;
  double input_scale = 969.0;
};

struct InvalidConfig : ModelError {
  explicit InvalidConfig(const std::string& what) : ModelError("nn config: " + what) {}
};
struct NonFiniteLoss : ModelError {
  explicit NonFiniteLoss(const std::string& what)
      : ModelError("nn training diverged: " + what) {}
};

namespace nn {

struct Dense {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

struct BatchNorm {
  Eigen::VectorXd gamma, beta;
  Eigen::VectorXd moving_mean, moving_var;  // non-trainable
  static constexpr double kEps = 1e-3;
  static constexpr double kMomentum = 0.99;
};

struct Lstm {
  // Gate order i, f, g, o stacked along rows.
  Eigen::MatrixXd w_input;      // 4H x D
  Eigen::MatrixXd w_recurrent;  // 4H x H (inert for a length-1 sequence)
  Eigen::VectorXd bias;         // 4H
};

struct Params {
  BatchNorm bn1;
  Dense dn1;
  BatchNorm bn2;
  Dense dn2;
  BatchNorm bn3;
  Lstm lstm1;
  BatchNorm bn4;
  Lstm lstm2;
  BatchNorm bn5;
  Lstm lstm3;
  BatchNorm bn6;
  Dense xy;
};

struct TensorView {
  std::string name;
  double* data;
  size_t size;
};

// Trainable tensors in a fixed traversal order (pairs up across Params
// instances for the optimizer and for finite-difference checks).
std::vector<TensorView> trainable_tensors(Params& p);

// Per-sample dropout masks, already inverse-scaled.
struct DropoutMasks {
  Eigen::MatrixXd m1, m2, m3;
};

struct LayerCount {
  std::string name;
  size_t params = 0;
  size_t trainable = 0;
  size_t non_trainable = 0;
};

}  // namespace nn

class NnModel final : public Regressor2D {
 public:
  explicit NnModel(NnArchitecture arch = {}, NnTrainConfig config = {}, uint64_t seed = 1);

  void fit(const std::vector<FeatureRow>& rows) override;
  Point2 predict(std::span<const double> features) const override;
  std::string kind() const override { return "nn"; }
  size_t input_width() const override { return static_cast<size_t>(arch_.input_width); }

  const NnArchitecture& architecture() const { return arch_; }
  const NnTrainConfig& config() const { return config_; }
  uint64_t seed() const { return seed_; }

  // Summary rows in stack order (dropout and reshape carry zero parameters).
  std::vector<nn::LayerCount> parameter_counts() const;
  size_t total_parameters() const;
  size_t trainable_parameters() const;
  size_t non_trainable_parameters() const;

  nn::Params& params() { return params_; }
  const nn::Params& params() const { return params_; }
  void mark_fitted() { fitted_ = true; }

  // --- training internals, exposed for gradient verification -------------
  // x_mapped is the already affine-mapped input (batch x input_width),
  // targets is batch x 2. Masks must match the architecture widths.
  nn::DropoutMasks sample_masks(Eigen::Index batch, Rng& rng) const;
  double training_loss(const Eigen::MatrixXd& x_mapped, const Eigen::MatrixXd& targets,
                       const nn::DropoutMasks& masks) const;
  double training_loss_and_gradients(const Eigen::MatrixXd& x_mapped,
                                     const Eigen::MatrixXd& targets,
                                     const nn::DropoutMasks& masks,
                                     nn::Params& gradients) const;

  Eigen::MatrixXd map_inputs(const std::vector<FeatureRow>& rows) const;
  Eigen::MatrixXd forward_inference(const Eigen::MatrixXd& x_mapped) const;

  const std::vector<double>& epoch_train_loss() const { return epoch_train_loss_; }
  const std::vector<double>& epoch_validation_mpe() const { return epoch_val_mpe_; }

 private:
  void init_params(Rng& rng);

  NnArchitecture arch_;
  NnTrainConfig config_;
  uint64_t seed_;
  nn::Params params_;
  bool fitted_ = false;
  std::vector<double> epoch_train_loss_;
  std::vector<double> epoch_val_mpe_;
};

}  // namespace wifiloc
