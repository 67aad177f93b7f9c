#pragma once
// Mean position error, path-grouped k-fold cross-validation and the four
// evaluation experiments (participation ablation, BSSID ablation, resilience
// to dropped BSSIDs, grid thinning), all seed-reproducible.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wifiloc/dataset.hpp"
#include "wifiloc/gbm.hpp"
#include "wifiloc/models.hpp"
#include "wifiloc/nn.hpp"

namespace wifiloc {

struct LengthMismatch : std::invalid_argument {
  LengthMismatch(size_t a, size_t b)
      : std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " +
                              std::to_string(b)) {}
};
struct EmptyInput : std::invalid_argument {
  EmptyInput() : std::invalid_argument("empty input") {}
};
struct TooFewPaths : std::invalid_argument {
  TooFewPaths(size_t paths, int k)
      : std::invalid_argument("cannot split " + std::to_string(paths) + " paths into " +
                              std::to_string(k) + " folds") {}
};
struct TooFewFolds : std::invalid_argument {
  explicit TooFewFolds(int k)
      : std::invalid_argument("fold count must be >= 2, got " + std::to_string(k)) {}
};
struct TooFewCheckpoints : std::invalid_argument {
  TooFewCheckpoints()
      : std::invalid_argument("grid too small to thin into two usable sub-grids") {}
};

// Mean Euclidean distance in meters between truth and predictions.
double mpe(std::span<const Point2> truth, std::span<const Point2> preds);

// ---------------------------------------------------------------------------

struct FoldAssignment {
  int k = 5;
  uint64_t seed = 0;
  std::map<std::string, int> fold_of;  // every path in exactly one fold

  std::vector<std::vector<std::string>> paths_per_fold() const;
};

// Paths shuffled by seed then dealt round-robin; fold sizes differ by at most
// one path. Depends only on (path id set, k, seed).
FoldAssignment kfold_split_paths(std::vector<std::string> path_ids, int k, uint64_t seed);
FoldAssignment kfold_split_by_path(const Dataset& dataset, int k, uint64_t seed);

// ---------------------------------------------------------------------------

// Declarative model choice so experiments can retrain per fold/repeat.
struct ModelSpec {
  enum class Type { Knn, Gbm, Nn, Ensemble, Constant };
  Type type = Type::Knn;
  std::string label;  // report name; defaults to the model kind
  int knn_k = 45;
  GbmParams gbm;
  NnArchitecture nn_arch;
  NnTrainConfig nn_train;
  std::vector<std::pair<ModelSpec, double>> components;  // ensemble members

  static ModelSpec knn(int k = 45);
  static ModelSpec gbm_spec(GbmParams params = {});
  static ModelSpec nn_spec(NnArchitecture arch = {}, NnTrainConfig config = {});
  static ModelSpec constant();
  static ModelSpec ensemble(std::vector<std::pair<ModelSpec, double>> members,
                            std::string label = "ensemble");
  std::string name() const;
};

// input_width overrides any architecture default so specs are reusable
// across vocabularies.
std::unique_ptr<Regressor2D> make_regressor(const ModelSpec& spec, size_t input_width,
                                            uint64_t seed);

// ---------------------------------------------------------------------------

struct EvalReport {
  std::string experiment;
  std::string model;
  std::vector<double> per_fold_mpe;
  double mean_mpe = 0.0;        // mean of the per-fold values
  double std_mpe = 0.0;         // population std of the per-fold values
  double pooled_mpe = 0.0;      // position error averaged over all test rows
  double pooled_row_std = 0.0;  // population std of per-row errors, pooled
  size_t n_rows = 0;
  size_t n_paths = 0;
  int k = 5;
  uint64_t seed = 0;
  std::string config;  // key=value snapshot embedded in every emitted CSV
};

// Per fold: train on the other k-1 folds, predict the held-out rows. Fold
// jobs run on the worker pool with derived seeds; results are
// schedule-independent.
EvalReport run_cv(const ModelSpec& spec, const Dataset& dataset,
                  const FoldAssignment& folds, uint64_t seed, size_t workers = 1);

// ---------------------------------------------------------------------------

struct SubsampleResult {
  double fraction = 1.0;
  size_t count = 0;  // paths or BSSIDs retained
  int repeats = 1;
  double mean_mpe = 0.0;  // across repeats
  double std_mpe = 0.0;   // population std across repeats
  std::vector<EvalReport> reports;
};

// Citizen-participation ablation: per repeat, keep a random fraction of
// paths, run full CV. The fold split is computed once from (k, seed) and
// restricted per repeat, so every experiment shares the same split.
std::vector<SubsampleResult> path_subsample_experiment(
    const ModelSpec& spec, const Dataset& dataset, const std::vector<double>& fractions,
    const std::vector<int>& repeats, int k, uint64_t seed, size_t workers = 1);

// Infrastructure ablation: per repeat, keep a random vocabulary subset,
// rebuild feature columns, retrain and CV.
std::vector<SubsampleResult> bssid_subsample_experiment(
    const ModelSpec& spec, const Dataset& dataset, const std::vector<double>& fractions,
    const std::vector<int>& repeats, int k, uint64_t seed, size_t workers = 1);

// ---------------------------------------------------------------------------

struct ResilienceCurve {
  std::vector<std::string> model_names;
  // mpe_per_order[order][model][n_dropped], n_dropped in [0, width)
  std::vector<std::vector<std::vector<double>>> mpe_per_order;
  std::vector<std::vector<double>> mean_mpe;  // [model][n_dropped]
};

// No retraining: one more randomly-chosen BSSID column is masked to the
// sentinel at each step and the fixed models re-predict the test rows.
ResilienceCurve resilience_experiment(
    const std::vector<std::pair<std::string, const Regressor2D*>>& models,
    const std::vector<FeatureRow>& test_rows, uint64_t drop_order_seed, int n_orders = 1,
    size_t workers = 1);

// ---------------------------------------------------------------------------

struct GridSplitResult {
  std::string model;
  double same_split_mpe = 0.0;   // averaged over the two parities
  double other_split_mpe = 0.0;  // fold models scored on the complementary rows
  double average = 0.0;
  double same_by_parity[2] = {0.0, 0.0};
  double other_by_parity[2] = {0.0, 0.0};
};

GridSplitResult grid_split_experiment(const ModelSpec& spec, const Dataset& dataset,
                                      const CheckpointGrid& grid, int k, uint64_t seed,
                                      size_t workers = 1);

// ---------------------------------------------------------------------------
// CSV emission (layouts mirror the summary tables).

std::string fold_report_csv(const std::vector<EvalReport>& reports);
std::string subsample_summary_csv(const std::vector<SubsampleResult>& results,
                                  const std::string& model, const std::string& unit);
std::string resilience_csv(const ResilienceCurve& curve);
std::string grid_split_csv(const std::vector<GridSplitResult>& results);

double population_std(std::span<const double> values);

}  // namespace wifiloc
