#include "wifiloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace wifiloc {

double mpe(std::span<const Point2> truth, std::span<const Point2> preds) {
  if (truth.size() != preds.size()) throw LengthMismatch(truth.size(), preds.size());
  if (truth.empty()) throw EmptyInput();
  double sum = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) sum += distance(truth[i], preds[i]);
  return sum / static_cast<double>(truth.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<std::vector<std::string>> FoldAssignment::paths_per_fold() const {
  std::vector<std::vector<std::string>> folds(static_cast<size_t>(k));
  for (const auto& [path, fold] : fold_of) folds[static_cast<size_t>(fold)].push_back(path);
  return folds;
}

FoldAssignment kfold_split_paths(std::vector<std::string> path_ids, int k, uint64_t seed) {
  if (k < 2) throw TooFewFolds(k);
  std::sort(path_ids.begin(), path_ids.end());
  path_ids.erase(std::unique(path_ids.begin(), path_ids.end()), path_ids.end());
  if (path_ids.size() < static_cast<size_t>(k)) throw TooFewPaths(path_ids.size(), k);
  Rng rng(seed);
  rng.shuffle(path_ids);
  FoldAssignment assignment;
  assignment.k = k;
  assignment.seed = seed;
  for (size_t i = 0; i < path_ids.size(); ++i)
    assignment.fold_of[path_ids[i]] = static_cast<int>(i % static_cast<size_t>(k));
  return assignment;
}

FoldAssignment kfold_split_by_path(const Dataset& dataset, int k, uint64_t seed) {
  return kfold_split_paths(dataset.path_ids(), k, seed);
}

// ---------------------------------------------------------------------------

ModelSpec ModelSpec::knn(int k) {
  ModelSpec spec;
  spec.type = Type::Knn;
  spec.knn_k = k;
  return spec;
}

ModelSpec ModelSpec::gbm_spec(GbmParams params) {
  ModelSpec spec;
  spec.type = Type::Gbm;
  spec.gbm = params;
  return spec;
}

ModelSpec ModelSpec::nn_spec(NnArchitecture arch, NnTrainConfig config) {
  ModelSpec spec;
  spec.type = Type::Nn;
  spec.nn_arch = arch;
  spec.nn_train = config;
  return spec;
}

ModelSpec ModelSpec::constant() {
  ModelSpec spec;
  spec.type = Type::Constant;
  return spec;
}

ModelSpec ModelSpec::ensemble(std::vector<std::pair<ModelSpec, double>> members,
                              std::string label) {
  ModelSpec spec;
  spec.type = Type::Ensemble;
  spec.components = std::move(members);
  spec.label = std::move(label);
  return spec;
}

std::string ModelSpec::name() const {
  if (!label.empty()) return label;
  switch (type) {
    case Type::Knn: return "knn";
    case Type::Gbm: return "gbm";
    case Type::Nn: return "nn";
    case Type::Ensemble: return "ensemble";
    case Type::Constant: return "constant";
  }
  return "model";
}

std::unique_ptr<Regressor2D> make_regressor(const ModelSpec& spec, size_t input_width,
                                            uint64_t seed) {
  switch (spec.type) {
    case ModelSpec::Type::Knn: return std::make_unique<KnnModel>(spec.knn_k);
    case ModelSpec::Type::Gbm: return std::make_unique<GbmModel>(spec.gbm, seed);
    case ModelSpec::Type::Nn: {
      NnArchitecture arch = spec.nn_arch;
      arch.input_width = static_cast<int>(input_width);
      return std::make_unique<NnModel>(arch, spec.nn_train, seed);
    }
    case ModelSpec::Type::Constant: return std::make_unique<ConstantModel>();
    case ModelSpec::Type::Ensemble: {
      auto ensemble = std::make_unique<EnsembleModel>();
      size_t index = 0;
      for (const auto& [member, weight] : spec.components)
        ensemble->add(make_regressor(member, input_width, derive_seed(seed, ++index)),
                      weight);
      return ensemble;
    }
  }
  throw ModelError("unhandled model spec");
}

// ---------------------------------------------------------------------------

namespace {

struct FoldOutcome {
  double fold_mpe = 0.0;
  std::vector<double> row_errors;
  bool scored = false;
};

void summarize(EvalReport& report) {
  std::vector<double> errors;
  double fold_sum = 0.0;
  for (double v : report.per_fold_mpe) fold_sum += v;
  report.mean_mpe = report.per_fold_mpe.empty()
                        ? 0.0
                        : fold_sum / static_cast<double>(report.per_fold_mpe.size());
  report.std_mpe = population_std(report.per_fold_mpe);
}

std::string snapshot(const ModelSpec& spec, int k, uint64_t seed, size_t n_rows,
                     size_t n_paths) {
  std::ostringstream out;
  out << "model=" << spec.name() << ";k=" << k << ";seed=" << seed << ";rows=" << n_rows
      << ";paths=" << n_paths;
  if (spec.type == ModelSpec::Type::Knn) out << ";knn_k=" << spec.knn_k;
  if (spec.type == ModelSpec::Type::Gbm)
    out << ";gbm_iters=" << spec.gbm.num_iterations << ";lr=" << spec.gbm.learning_rate;
  return out.str();
}

}  // namespace

EvalReport run_cv(const ModelSpec& spec, const Dataset& dataset,
                  const FoldAssignment& folds, uint64_t seed, size_t workers) {
  EvalReport report;
  report.experiment = "cv";
  report.model = spec.name();
  report.k = folds.k;
  report.seed = seed;
  report.n_rows = dataset.rows.size();
  report.n_paths = dataset.path_count();
  report.config = snapshot(spec, folds.k, seed, report.n_rows, report.n_paths);

  const size_t width = dataset.vocabulary.size();
  std::vector<FoldOutcome> outcomes(static_cast<size_t>(folds.k));
  run_indexed(static_cast<size_t>(folds.k), workers, [&](size_t f) {
    std::vector<FeatureRow> train, test;
    for (const auto& row : dataset.rows) {
      const int fold = folds.fold_of.at(row.path_id);
      (fold == static_cast<int>(f) ? test : train).push_back(row);
    }
    if (test.empty() || train.empty()) return;
    auto model = make_regressor(spec, width, derive_seed(seed, 100 + f));
    model->fit(train);
    FoldOutcome& outcome = outcomes[f];
    outcome.row_errors.reserve(test.size());
    for (const auto& row : test)
      outcome.row_errors.push_back(distance(model->predict(row.features), row.target));
    outcome.fold_mpe =
        std::accumulate(outcome.row_errors.begin(), outcome.row_errors.end(), 0.0) /
        static_cast<double>(outcome.row_errors.size());
    outcome.scored = true;
  });

  std::vector<double> pooled;
  for (const auto& outcome : outcomes) {
    if (!outcome.scored) continue;
    report.per_fold_mpe.push_back(outcome.fold_mpe);
    pooled.insert(pooled.end(), outcome.row_errors.begin(), outcome.row_errors.end());
  }
  summarize(report);
  if (!pooled.empty()) {
    report.pooled_mpe =
        std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
    report.pooled_row_std = population_std(pooled);
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

Dataset subset_by_paths(const Dataset& dataset, const std::set<std::string>& keep) {
  Dataset out;
  out.grid = dataset.grid;
  out.vocabulary = dataset.vocabulary;
  for (const auto& row : dataset.rows)
    if (keep.count(row.path_id)) out.rows.push_back(row);
  return out;
}

std::vector<int> broadcast_repeats(const std::vector<double>& fractions,
                                   const std::vector<int>& repeats) {
  if (repeats.size() == fractions.size()) return repeats;
  if (repeats.size() == 1) return std::vector<int>(fractions.size(), repeats[0]);
  throw std::invalid_argument("repeats must match fractions (or be a single value)");
}

}  // namespace

std::vector<SubsampleResult> path_subsample_experiment(
    const ModelSpec& spec, const Dataset& dataset, const std::vector<double>& fractions,
    const std::vector<int>& repeats_in, int k, uint64_t seed, size_t workers) {
  const auto repeats = broadcast_repeats(fractions, repeats_in);
  const auto all_paths = dataset.path_ids();
  // One master split, restricted per repeat: the fold assignment is kept the
  // same across every experiment so results stay comparable.
  const auto folds = kfold_split_by_path(dataset, k, seed);
  std::vector<SubsampleResult> results;

  for (size_t fi = 0; fi < fractions.size(); ++fi) {
    const double fraction = fractions[fi];
    if (fraction <= 0.0 || fraction > 1.0)
      throw std::invalid_argument("path fraction must be in (0, 1]");
    SubsampleResult result;
    result.fraction = fraction;
    result.repeats = repeats[fi];
    result.count = std::max<size_t>(
        static_cast<size_t>(k),
        static_cast<size_t>(std::llround(fraction * static_cast<double>(all_paths.size()))));
    result.reports.resize(static_cast<size_t>(repeats[fi]));

    run_indexed(static_cast<size_t>(repeats[fi]), workers, [&, fi](size_t r) {
      const uint64_t repeat_seed = derive_seed(seed, 1 + fi * 1000 + r);
      Rng rng(repeat_seed);
      const auto picked = rng.sample_indices(all_paths.size(), result.count);
      std::set<std::string> keep;
      for (size_t idx : picked) keep.insert(all_paths[idx]);
      const Dataset subset = subset_by_paths(dataset, keep);
      auto report = run_cv(spec, subset, folds, repeat_seed, 1);
      report.experiment = "paths";
      result.reports[r] = std::move(report);
    });

    std::vector<double> means;
    for (const auto& report : result.reports) means.push_back(report.mean_mpe);
    result.mean_mpe =
        std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    result.std_mpe = population_std(means);
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<SubsampleResult> bssid_subsample_experiment(
    const ModelSpec& spec, const Dataset& dataset, const std::vector<double>& fractions,
    const std::vector<int>& repeats_in, int k, uint64_t seed, size_t workers) {
  const auto repeats = broadcast_repeats(fractions, repeats_in);
  const size_t width = dataset.vocabulary.size();
  const auto folds = kfold_split_by_path(dataset, k, seed);
  std::vector<SubsampleResult> results;

  for (size_t fi = 0; fi < fractions.size(); ++fi) {
    const double fraction = fractions[fi];
    if (fraction <= 0.0 || fraction > 1.0)
      throw std::invalid_argument("bssid fraction must be in (0, 1]");
    SubsampleResult result;
    result.fraction = fraction;
    result.repeats = repeats[fi];
    result.count = std::max<size_t>(
        1, static_cast<size_t>(std::llround(fraction * static_cast<double>(width))));
    result.reports.resize(static_cast<size_t>(repeats[fi]));

    run_indexed(static_cast<size_t>(repeats[fi]), workers, [&, fi](size_t r) {
      const uint64_t repeat_seed = derive_seed(seed, 50000 + fi * 1000 + r);
      Rng rng(repeat_seed);
      const auto keep = rng.sample_indices(width, result.count);
      const Dataset projected = project_columns(dataset, keep);
      auto report = run_cv(spec, projected, folds, repeat_seed, 1);
      report.experiment = "bssids";
      result.reports[r] = std::move(report);
    });

    std::vector<double> means;
    for (const auto& report : result.reports) means.push_back(report.mean_mpe);
    result.mean_mpe =
        std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    result.std_mpe = population_std(means);
    results.push_back(std::move(result));
  }
  return results;
}

// ---------------------------------------------------------------------------

ResilienceCurve resilience_experiment(
    const std::vector<std::pair<std::string, const Regressor2D*>>& models,
    const std::vector<FeatureRow>& test_rows, uint64_t drop_order_seed, int n_orders,
    size_t workers) {
  if (test_rows.empty()) throw EmptyInput();
  const size_t width = test_rows.front().features.size();

  ResilienceCurve curve;
  for (const auto& [name, model] : models) curve.model_names.push_back(name);
  curve.mpe_per_order.resize(static_cast<size_t>(n_orders));

  std::vector<Point2> targets;
  targets.reserve(test_rows.size());
  for (const auto& row : test_rows) targets.push_back(row.target);

  run_indexed(static_cast<size_t>(n_orders), workers, [&](size_t order_idx) {
    Rng rng(derive_seed(drop_order_seed, order_idx));
    std::vector<size_t> drop_order(width);
    std::iota(drop_order.begin(), drop_order.end(), size_t{0});
    rng.shuffle(drop_order);

    std::vector<std::vector<double>> masked;
    masked.reserve(test_rows.size());
    for (const auto& row : test_rows) masked.push_back(row.features);

    auto& per_model = curve.mpe_per_order[order_idx];
    per_model.assign(models.size(), std::vector<double>(width, 0.0));

    std::vector<Point2> preds(test_rows.size());
    for (size_t dropped = 0; dropped < width; ++dropped) {
      if (dropped > 0) {
        const size_t col = drop_order[dropped - 1];
        for (auto& features : masked) features[col] = kMissingRssi;
      }
      for (size_t m = 0; m < models.size(); ++m) {
        for (size_t i = 0; i < masked.size(); ++i)
          preds[i] = models[m].second->predict(masked[i]);
        per_model[m][dropped] = mpe(targets, preds);
      }
    }
  });

  curve.mean_mpe.assign(models.size(), std::vector<double>(width, 0.0));
  for (const auto& per_model : curve.mpe_per_order)
    for (size_t m = 0; m < models.size(); ++m)
      for (size_t s = 0; s < width; ++s) curve.mean_mpe[m][s] += per_model[m][s];
  for (auto& row : curve.mean_mpe)
    for (double& v : row) v /= static_cast<double>(n_orders);
  return curve;
}

// ---------------------------------------------------------------------------

GridSplitResult grid_split_experiment(const ModelSpec& spec, const Dataset& dataset,
                                      const CheckpointGrid& grid, int k, uint64_t seed,
                                      size_t workers) {
  const CheckpointGrid sub[2] = {thin_grid(grid, Parity::Even),
                                 thin_grid(grid, Parity::Odd)};
  if (sub[0].points.size() < 2 || sub[1].points.size() < 2) throw TooFewCheckpoints();

  const auto folds = kfold_split_by_path(dataset, k, seed);
  const size_t width = dataset.vocabulary.size();

  GridSplitResult result;
  result.model = spec.name();

  for (int parity = 0; parity < 2; ++parity) {
    const auto rows_same = rows_in_grid(dataset, sub[parity]);
    const auto rows_other = rows_in_grid(dataset, sub[1 - parity]);

    struct ParityFold {
      double same = 0.0, other = 0.0;
      bool same_scored = false, other_scored = false;
    };
    std::vector<ParityFold> outcomes(static_cast<size_t>(k));

    run_indexed(static_cast<size_t>(k), workers, [&](size_t f) {
      std::vector<FeatureRow> train, test_same, test_other;
      for (const auto& row : rows_same) {
        const int fold = folds.fold_of.at(row.path_id);
        (fold == static_cast<int>(f) ? test_same : train).push_back(row);
      }
      for (const auto& row : rows_other)
        if (folds.fold_of.at(row.path_id) == static_cast<int>(f)) test_other.push_back(row);
      if (train.empty()) return;
      auto model =
          make_regressor(spec, width, derive_seed(seed, 500 + static_cast<size_t>(parity) * 50 + f));
      model->fit(train);
      auto score = [&model](const std::vector<FeatureRow>& rows, double& out) {
        if (rows.empty()) return false;
        double sum = 0.0;
        for (const auto& row : rows) sum += distance(model->predict(row.features), row.target);
        out = sum / static_cast<double>(rows.size());
        return true;
      };
      outcomes[f].same_scored = score(test_same, outcomes[f].same);
      outcomes[f].other_scored = score(test_other, outcomes[f].other);
    });

    double same_sum = 0.0, other_sum = 0.0;
    size_t same_n = 0, other_n = 0;
    for (const auto& outcome : outcomes) {
      if (outcome.same_scored) {
        same_sum += outcome.same;
        ++same_n;
      }
      if (outcome.other_scored) {
        other_sum += outcome.other;
        ++other_n;
      }
    }
    result.same_by_parity[parity] = same_n ? same_sum / static_cast<double>(same_n) : 0.0;
    result.other_by_parity[parity] = other_n ? other_sum / static_cast<double>(other_n) : 0.0;
  }

  result.same_split_mpe = 0.5 * (result.same_by_parity[0] + result.same_by_parity[1]);
  result.other_split_mpe = 0.5 * (result.other_by_parity[0] + result.other_by_parity[1]);
  result.average = 0.5 * (result.same_split_mpe + result.other_split_mpe);
  return result;
}

// ---------------------------------------------------------------------------

std::string fold_report_csv(const std::vector<EvalReport>& reports) {
  std::string out =
      "experiment,model,fold,mpe,mean_mpe,std_mpe,pooled_mpe,pooled_row_std,rows,paths,k,"
      "seed,config\n";
  for (const auto& report : reports) {
    for (size_t f = 0; f < report.per_fold_mpe.size(); ++f) {
      out += report.experiment + ',' + report.model + ',' + std::to_string(f) + ',' +
             format_double(report.per_fold_mpe[f]) + ',' + format_double(report.mean_mpe) +
             ',' + format_double(report.std_mpe) + ',' + format_double(report.pooled_mpe) +
             ',' + format_double(report.pooled_row_std) + ',' +
             std::to_string(report.n_rows) + ',' + std::to_string(report.n_paths) + ',' +
             std::to_string(report.k) + ',' + std::to_string(report.seed) + ',' +
             report.config + '\n';
    }
  }
  return out;
}

std::string subsample_summary_csv(const std::vector<SubsampleResult>& results,
                                  const std::string& model, const std::string& unit) {
  std::string out = "model," + unit + ",repeats,mean_mpe,std_mpe\n";
  for (const auto& result : results) {
    out += model + ',' + std::to_string(result.count) + ',' +
           std::to_string(result.repeats) + ',' + format_double(result.mean_mpe) + ',' +
           format_double(result.std_mpe) + '\n';
  }
  return out;
}

std::string resilience_csv(const ResilienceCurve& curve) {
  std::string out = "num_dropped";
  for (const auto& name : curve.model_names) out += ",mpe_" + name;
  out += '\n';
  if (curve.mean_mpe.empty()) return out;
  const size_t steps = curve.mean_mpe.front().size();
  for (size_t s = 0; s < steps; ++s) {
    out += std::to_string(s);
    for (size_t m = 0; m < curve.mean_mpe.size(); ++m)
      out += ',' + format_double(curve.mean_mpe[m][s]);
    out += '\n';
  }
  return out;
}

std::string grid_split_csv(const std::vector<GridSplitResult>& results) {
  std::string out = "model,same_split,other_split,average\n";
  for (const auto& result : results) {
    out += result.model + ',' + format_double(result.same_split_mpe) + ',' +
           format_double(result.other_split_mpe) + ',' + format_double(result.average) +
           '\n';
  }
  return out;
}

}  // namespace wifiloc
