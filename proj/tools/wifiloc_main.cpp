// Pipeline driver: synth -> build -> train/eval/experiment/stats, all seeded
// and config-file driven. Every run writes its resolved configuration next to
// its outputs so any report can be reproduced from its header alone.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wifiloc/dataset.hpp"
#include "wifiloc/evaluation.hpp"
#include "wifiloc/model_io.hpp"
#include "wifiloc/synthgen.hpp"

namespace fs = std::filesystem;
using namespace wifiloc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetFormatError("cannot write '" + path.string() + "'");
  out << text;
}

struct CommonOpts {
  std::string dataset_csv;
  std::string vocab_json;
  std::string grid_csv;
  std::string out_dir = "out";
  uint64_t seed = 1;
  int k = 5;
  size_t jobs = 1;
};

struct ModelOpts {
  std::string model = "gbm";
  int knn_k = 45;
  int gbm_iterations = 500;
  double gbm_learning_rate = 0.005;
  int nn_epochs = 40;
  int nn_batch = 128;
  std::string ensemble_weights = "gbm=2,nn=1";
};

GbmParams gbm_params_from(const ModelOpts& opts) {
  GbmParams params;
  params.num_iterations = opts.gbm_iterations;
  params.learning_rate = opts.gbm_learning_rate;
  return params;
}

NnTrainConfig nn_config_from(const ModelOpts& opts) {
  NnTrainConfig config;
  config.epochs = opts.nn_epochs;
  config.batch_size = opts.nn_batch;
  return config;
}

ModelSpec base_spec(const std::string& name, const ModelOpts& opts) {
  if (name == "knn") return ModelSpec::knn(opts.knn_k);
  if (name == "gbm") return ModelSpec::gbm_spec(gbm_params_from(opts));
  if (name == "nn") return ModelSpec::nn_spec({}, nn_config_from(opts));
  if (name == "constant") return ModelSpec::constant();
  throw CLI::ValidationError("--model", "unknown model '" + name + "'");
}

ModelSpec spec_from(const ModelOpts& opts) {
  if (opts.model != "ensemble") return base_spec(opts.model, opts);
  std::vector<std::pair<ModelSpec, double>> members;
  std::string label = "ensemble";
  for (const auto& part : split_char(opts.ensemble_weights, ',')) {
    const auto kv = split_char(part, '=');
    if (kv.size() != 2)
      throw CLI::ValidationError("--ensemble-weights", "expected name=weight pairs");
    const auto weight = parse_double(kv[1]);
    if (!weight || *weight < 0.0)
      throw CLI::ValidationError("--ensemble-weights", "bad weight '" + kv[1] + "'");
    members.push_back({base_spec(kv[0], opts), *weight});
    label += "_" + kv[0] + format_double(*weight);
  }
  return ModelSpec::ensemble(std::move(members), label);
}

Dataset load_dataset_opts(const CommonOpts& opts) {
  const CheckpointGrid grid = load_grid(opts.grid_csv);
  return load_dataset(opts.dataset_csv, opts.vocab_json, grid);
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_dataset) {
  if (needs_dataset) {
    cmd->add_option("--dataset", opts.dataset_csv, "dataset CSV")->required();
    cmd->add_option("--vocab", opts.vocab_json, "vocabulary sidecar JSON")->required();
    cmd->add_option("--grid", opts.grid_csv, "grid CSV")->required();
  }
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "master seed");
  cmd->add_option("--k", opts.k, "fold count");
  cmd->add_option("--jobs", opts.jobs, "worker threads");
}

void add_model(CLI::App* cmd, ModelOpts& opts) {
  cmd->add_option("--model", opts.model, "knn|gbm|nn|constant|ensemble");
  cmd->add_option("--knn-k", opts.knn_k, "neighbors");
  cmd->add_option("--gbm-iterations", opts.gbm_iterations, "boosting iterations");
  cmd->add_option("--gbm-learning-rate", opts.gbm_learning_rate, "shrinkage");
  cmd->add_option("--nn-epochs", opts.nn_epochs, "training epochs");
  cmd->add_option("--nn-batch", opts.nn_batch, "batch size");
  cmd->add_option("--ensemble-weights", opts.ensemble_weights,
                  "comma list of name=weight (ensemble model only)");
}

void dump_config(const CLI::App& app, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "run_config.ini", std::ios::binary);
  out << app.config_to_str(true, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowd-sensed WiFi indoor positioning pipeline"};
  app.set_config("--config", "", "INI config file; command line overrides");
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic campaign");
  struct {
    int cols = 10, rows = 10;
    double spacing = 2.5;
    int n_aps = 60;
    double sigma = 4.0, exponent = 3.0, floor = -97.0;
    CampaignConfig campaign;
    std::string out_dir = "out/campaign";
  } synth_opts;
  synth->add_option("--cols", synth_opts.cols, "grid columns");
  synth->add_option("--rows", synth_opts.rows, "grid rows");
  synth->add_option("--spacing", synth_opts.spacing, "checkpoint spacing, meters");
  synth->add_option("--n-aps", synth_opts.n_aps, "access points");
  synth->add_option("--sigma", synth_opts.sigma, "shadowing sigma, dB");
  synth->add_option("--exponent", synth_opts.exponent, "path loss exponent");
  synth->add_option("--floor", synth_opts.floor, "visibility floor, dBm");
  synth->add_option("--n-paths", synth_opts.campaign.n_paths, "walks to generate");
  synth->add_option("--min-taps", synth_opts.campaign.min_taps, "min checkpoints per walk");
  synth->add_option("--max-taps", synth_opts.campaign.max_taps, "max checkpoints per walk");
  synth->add_option("--scan-period-ms", synth_opts.campaign.scan_period_ms, "WiFi scan period");
  synth->add_option("--sensor-period-ms", synth_opts.campaign.sensor_period_ms,
                    "sensor sample period");
  synth->add_option("--hotspot-fraction", synth_opts.campaign.hotspot_fraction,
                    "fraction of walks carrying a phone hotspot");
  synth->add_option("--seed", synth_opts.campaign.seed, "campaign seed");
  synth->add_option("--out", synth_opts.out_dir, "output directory");

  // --- build ---------------------------------------------------------------
  auto* build = app.add_subcommand("build", "corpus -> dataset CSV + vocabulary");
  struct {
    std::string corpus_dir;
    std::string grid_csv;
    std::string out_dir = "out/dataset";
    DatasetConfig config;
  } build_opts;
  build->add_option("--corpus", build_opts.corpus_dir, "walk log directory")->required();
  build->add_option("--grid", build_opts.grid_csv, "grid CSV")->required();
  build->add_option("--out", build_opts.out_dir, "output directory");
  build->add_option("--min-taps", build_opts.config.min_taps, "min checkpoint taps per route");
  build->add_option("--min-presence", build_opts.config.min_checkpoint_presence,
                    "min distinct checkpoints per retained BSSID");
  build->add_option("--window-ms", build_opts.config.association_window_ms,
                    "scan-to-tap association window");

  // --- stats ---------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("stats", "dataset statistics + histogram CSVs");
  CommonOpts stats_opts;
  add_common(stats_cmd, stats_opts, true);

  // --- train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "fit one model on the full dataset");
  CommonOpts train_common;
  ModelOpts train_model;
  std::string train_out = "out/model.bin";
  add_common(train, train_common, true);
  add_model(train, train_model);
  train->add_option("--model-out", train_out, "model file path");

  // --- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "path-grouped cross-validation");
  CommonOpts eval_common;
  ModelOpts eval_model;
  add_common(eval, eval_common, true);
  add_model(eval, eval_model);

  // --- experiment ----------------------------------------------------------
  auto* experiment = app.add_subcommand("experiment", "evaluation experiments");
  experiment->require_subcommand(1);
  CommonOpts exp_common;
  ModelOpts exp_model;
  struct {
    std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
    std::vector<int> repeats = {10};
    std::string models = "gbm,knn,ensemble";
    double train_fraction = 0.8;
    int n_orders = 10;
  } exp_opts;

  auto* exp_paths = experiment->add_subcommand("paths", "participation ablation");
  auto* exp_bssids = experiment->add_subcommand("bssids", "infrastructure ablation");
  auto* exp_resilience = experiment->add_subcommand("resilience", "masked-BSSID curves");
  auto* exp_grid = experiment->add_subcommand("grid", "thinned-grid comparison");
  for (auto* sub : {exp_paths, exp_bssids, exp_resilience, exp_grid}) {
    add_common(sub, exp_common, true);
    add_model(sub, exp_model);
  }
  for (auto* sub : {exp_paths, exp_bssids}) {
    sub->add_option("--fractions", exp_opts.fractions, "subset fractions in (0,1]");
    sub->add_option("--repeats", exp_opts.repeats,
                    "repeats per fraction (single value broadcasts)");
  }
  exp_resilience->add_option("--models", exp_opts.models, "comma list incl. ensemble");
  exp_resilience->add_option("--train-fraction", exp_opts.train_fraction,
                             "fraction of paths used for training");
  exp_resilience->add_option("--orders", exp_opts.n_orders, "random drop orders");
  exp_grid->add_option("--models", exp_opts.models, "comma list incl. ensemble");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*synth) {
      const auto grid =
          generate_building(synth_opts.cols, synth_opts.rows, synth_opts.spacing);
      RadioEnvironment env;
      env.aps = generate_aps(grid, synth_opts.n_aps, synth_opts.campaign.seed);
      env.shadowing_sigma_db = synth_opts.sigma;
      env.path_loss_exponent = synth_opts.exponent;
      env.visibility_floor_dbm = synth_opts.floor;
      const auto campaign = generate_campaign(env, grid, synth_opts.campaign);
      const fs::path out = synth_opts.out_dir;
      write_corpus(campaign.logs, (out / "corpus").string());
      save_grid(grid, (out / "grid.csv").string());
      write_text(out / "aps.csv", aps_to_csv(env.aps));
      write_text(out / "truth.csv", truth_to_csv(campaign.truth));
      dump_config(app, out);
      std::cout << "wrote " << campaign.logs.size() << " walk logs, "
                << grid.points.size() << " checkpoints, " << env.aps.size()
                << " access points to " << out.string() << "\n";
    } else if (*build) {
      const auto grid = load_grid(build_opts.grid_csv);
      const auto logs = load_corpus(build_opts.corpus_dir);
      const auto dataset = build_dataset(logs, grid, build_opts.config);
      if (dataset.rows.empty()) throw EmptyDataset();
      const fs::path out = build_opts.out_dir;
      fs::create_directories(out);
      save_dataset(dataset, (out / "dataset.csv").string(),
                   (out / "vocabulary.json").string());
      dump_config(app, out);
      std::cout << dataset_stats(dataset).summary();
    } else if (*stats_cmd) {
      const auto dataset = load_dataset_opts(stats_opts);
      const auto stats = dataset_stats(dataset);
      const fs::path out = stats_opts.out_dir;
      write_text(out / "rssi_histogram.csv", rssi_histogram_csv(stats));
      write_text(out / "bssid_presence.csv", bssid_presence_csv(stats));
      dump_config(app, out);
      std::cout << stats.summary();
    } else if (*train) {
      const auto dataset = load_dataset_opts(train_common);
      if (dataset.rows.empty()) throw EmptyDataset();
      const auto spec = spec_from(train_model);
      auto model = make_regressor(spec, dataset.vocabulary.size(), train_common.seed);
      model->fit(dataset.rows);
      fs::create_directories(fs::path(train_out).parent_path().empty()
                                 ? "."
                                 : fs::path(train_out).parent_path());
      save_model(*model, train_out, {dataset.vocabulary.corpus_fingerprint});
      dump_config(app, train_common.out_dir);
      std::cout << "trained " << model->kind() << " on " << dataset.rows.size()
                << " rows -> " << train_out << "\n";
    } else if (*eval) {
      const auto dataset = load_dataset_opts(eval_common);
      if (dataset.rows.empty()) throw EmptyDataset();
      const auto spec = spec_from(eval_model);
      const auto folds = kfold_split_by_path(dataset, eval_common.k, eval_common.seed);
      const auto report =
          run_cv(spec, dataset, folds, eval_common.seed, eval_common.jobs);
      const fs::path out = eval_common.out_dir;
      write_text(out / ("cv_" + report.model + ".csv"), fold_report_csv({report}));
      dump_config(app, out);
      std::cout << report.model << ": mean MPE " << format_double(report.mean_mpe)
                << " m, std " << format_double(report.std_mpe) << " (pooled "
                << format_double(report.pooled_mpe) << " +- "
                << format_double(report.pooled_row_std) << ")\n";
    } else if (*experiment) {
      const auto dataset = load_dataset_opts(exp_common);
      if (dataset.rows.empty()) throw EmptyDataset();
      const fs::path out = exp_common.out_dir;
      const auto spec = spec_from(exp_model);

      if (*exp_paths || *exp_bssids) {
        const bool by_paths = static_cast<bool>(*exp_paths);
        const auto results =
            by_paths ? path_subsample_experiment(spec, dataset, exp_opts.fractions,
                                                 exp_opts.repeats, exp_common.k,
                                                 exp_common.seed, exp_common.jobs)
                     : bssid_subsample_experiment(spec, dataset, exp_opts.fractions,
                                                  exp_opts.repeats, exp_common.k,
                                                  exp_common.seed, exp_common.jobs);
        const std::string unit = by_paths ? "paths" : "wifis";
        write_text(out / (unit + "_summary.csv"),
                   subsample_summary_csv(results, spec.name(), unit));
        std::vector<EvalReport> all;
        for (const auto& result : results)
          all.insert(all.end(), result.reports.begin(), result.reports.end());
        write_text(out / (unit + "_folds.csv"), fold_report_csv(all));
        dump_config(app, out);
        for (const auto& result : results)
          std::cout << unit << "=" << result.count << " repeats=" << result.repeats
                    << " mean MPE " << format_double(result.mean_mpe) << " +- "
                    << format_double(result.std_mpe) << "\n";
      } else if (*exp_resilience) {
        // Hold out a path subset for the curve; train each requested model once.
        auto paths = dataset.path_ids();
        Rng rng(derive_seed(exp_common.seed, 3));
        rng.shuffle(paths);
        const size_t n_train = std::max<size_t>(
            1, static_cast<size_t>(std::llround(exp_opts.train_fraction *
                                                static_cast<double>(paths.size()))));
        std::set<std::string> train_paths(paths.begin(),
                                          paths.begin() + static_cast<long>(n_train));
        std::vector<FeatureRow> train_rows, test_rows;
        for (const auto& row : dataset.rows)
          (train_paths.count(row.path_id) ? train_rows : test_rows).push_back(row);
        if (train_rows.empty() || test_rows.empty()) throw EmptyDataset();

        std::vector<std::shared_ptr<Regressor2D>> owned;
        std::vector<std::pair<std::string, const Regressor2D*>> models;
        std::map<std::string, const Regressor2D*> by_name;
        const auto names = split_char(exp_opts.models, ',');
        for (const auto& name : names) {
          if (name == "ensemble") continue;
          auto model = std::shared_ptr<Regressor2D>(
              make_regressor(base_spec(name, exp_model), dataset.vocabulary.size(),
                             derive_seed(exp_common.seed, models.size())));
          model->fit(train_rows);
          owned.push_back(model);
          models.push_back({name, model.get()});
          by_name[name] = model.get();
        }
        std::shared_ptr<EnsembleModel> ensemble;
        if (std::find(names.begin(), names.end(), "ensemble") != names.end()) {
          ensemble = std::make_shared<EnsembleModel>();
          for (const auto& part : split_char(exp_model.ensemble_weights, ',')) {
            const auto kv = split_char(part, '=');
            if (kv.size() != 2 || !by_name.count(kv[0]))
              throw CLI::ValidationError("--ensemble-weights",
                                         "ensemble member '" + part +
                                             "' not in --models");
            auto it = std::find_if(owned.begin(), owned.end(), [&](const auto& m) {
              return m.get() == by_name[kv[0]];
            });
            ensemble->add(*it, parse_double(kv[1]).value_or(1.0));
          }
          models.push_back({"ensemble", ensemble.get()});
        }
        const auto curve = resilience_experiment(models, test_rows, exp_common.seed,
                                                 exp_opts.n_orders, exp_common.jobs);
        write_text(out / "resilience_curve.csv", resilience_csv(curve));
        dump_config(app, out);
        std::cout << "resilience curve over " << curve.mean_mpe.front().size()
                  << " drop steps, " << exp_opts.n_orders << " orders -> "
                  << (out / "resilience_curve.csv").string() << "\n";
      } else if (*exp_grid) {
        std::vector<GridSplitResult> results;
        for (const auto& name : split_char(exp_opts.models, ',')) {
          ModelOpts opts = exp_model;
          opts.model = name;
          results.push_back(grid_split_experiment(spec_from(opts), dataset, dataset.grid,
                                                  exp_common.k, exp_common.seed,
                                                  exp_common.jobs));
        }
        write_text(out / "grid_split.csv", grid_split_csv(results));
        dump_config(app, out);
        for (const auto& result : results)
          std::cout << result.model << ": same " << format_double(result.same_split_mpe)
                    << " other " << format_double(result.other_split_mpe) << " average "
                    << format_double(result.average) << "\n";
      }
    }
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParams& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
