#include "wifiloc/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wifiloc {

namespace {

// Per-feature histogram bin edges; value v falls in bin
// lower_bound(edges, v), i.e. the first edge >= v. A split at bin t sends
// v <= edges[t] left, which is exactly the raw-value rule the stored tree
// applies at predict time.
struct BinMapper {
  std::vector<std::vector<double>> edges;  // per feature

  uint16_t bin_of(size_t feature, double v) const {
    const auto& e = edges[feature];
    return static_cast<uint16_t>(std::lower_bound(e.begin(), e.end(), v) - e.begin());
  }
};

BinMapper build_bins(const std::vector<const FeatureRow*>& rows, size_t width, int max_bin) {
  BinMapper mapper;
  mapper.edges.resize(width);
  std::vector<double> values(rows.size());
  for (size_t j = 0; j < width; ++j) {
    for (size_t i = 0; i < rows.size(); ++i) values[i] = rows[i]->features[j];
    std::sort(values.begin(), values.end());
    std::vector<double> distinct;
    for (double v : values)
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);

    auto& edges = mapper.edges[j];
    if (distinct.size() <= static_cast<size_t>(max_bin)) {
      for (size_t u = 0; u + 1 < distinct.size(); ++u)
        edges.push_back(0.5 * (distinct[u] + distinct[u + 1]));
    } else {
      // Quantile cuts over the full (duplicated) value list.
      const size_t n = values.size();
      for (int b = 1; b < max_bin; ++b) {
        const size_t pos = static_cast<size_t>(b) * n / static_cast<size_t>(max_bin);
        if (pos == 0 || pos >= n) continue;
        if (values[pos - 1] != values[pos]) {
          const double cut = 0.5 * (values[pos - 1] + values[pos]);
          if (edges.empty() || cut != edges.back()) edges.push_back(cut);
        }
      }
    }
  }
  return mapper;
}

struct HistBin {
  double grad_sum = 0.0;
  uint32_t count = 0;
};

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;  // go left when binned value <= bin
  bool valid() const { return feature >= 0; }
};

struct LeafState {
  std::vector<uint32_t> row_idx;   // indices into the canonical row arrays
  double grad_sum = 0.0;
  int depth = 0;
  int node = -1;                   // position in the tree under construction
  std::vector<HistBin> histogram;  // flattened per selected feature
  SplitChoice best;
};

class TreeBuilder {
 public:
  TreeBuilder(const GbmParams& params, const BinMapper& mapper,
              const std::vector<std::vector<uint16_t>>& binned,
              const std::vector<double>& gradients,
              const std::vector<uint32_t>& features)
      : params_(params),
        mapper_(mapper),
        binned_(binned),
        gradients_(gradients),
        features_(features) {
    offsets_.resize(features_.size() + 1, 0);
    for (size_t f = 0; f < features_.size(); ++f)
      offsets_[f + 1] = offsets_[f] + mapper_.edges[features_[f]].size() + 1;
  }

  GbmTree build(const std::vector<uint32_t>& bag) {
    GbmTree tree;
    tree.nodes.push_back({});

    auto root = std::make_unique<LeafState>();
    root->row_idx = bag;
    root->node = 0;
    compute_histogram(*root);
    finalize_leaf(tree, *root);
    find_best_split(*root);

    std::vector<std::unique_ptr<LeafState>> leaves;
    leaves.push_back(std::move(root));

    int n_leaves = 1;
    while (n_leaves < params_.num_leaves) {
      // Highest gain wins; earlier-created leaf wins ties, keeping growth
      // deterministic.
      size_t best_i = leaves.size();
      for (size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i] || !leaves[i]->best.valid()) continue;
        if (best_i == leaves.size() || leaves[i]->best.gain > leaves[best_i]->best.gain)
          best_i = i;
      }
      if (best_i == leaves.size()) break;

      auto leaf = std::move(leaves[best_i]);
      leaves[best_i].reset();
      const SplitChoice split = leaf->best;
      const uint32_t feat = features_[static_cast<size_t>(split.feature)];

      auto left = std::make_unique<LeafState>();
      auto right = std::make_unique<LeafState>();
      left->depth = right->depth = leaf->depth + 1;
      for (uint32_t i : leaf->row_idx) {
        if (binned_[feat][i] <= static_cast<uint16_t>(split.bin)) {
          left->row_idx.push_back(i);
          left->grad_sum += gradients_[i];
        } else {
          right->row_idx.push_back(i);
          right->grad_sum += gradients_[i];
        }
      }

      // Turn the leaf into an internal node. Children are appended first:
      // push_back may reallocate, so the parent reference comes after.
      const int left_idx = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      const int right_idx = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      GbmNode& node = tree.nodes[static_cast<size_t>(leaf->node)];
      node.feature = static_cast<int>(feat);
      node.threshold = mapper_.edges[feat][static_cast<size_t>(split.bin)];
      node.value = 0.0;
      node.left = left_idx;
      node.right = right_idx;
      left->node = left_idx;
      right->node = right_idx;

      // Histogram subtraction: build the smaller child, derive the other.
      LeafState* small = left->row_idx.size() <= right->row_idx.size() ? left.get()
                                                                       : right.get();
      LeafState* big = small == left.get() ? right.get() : left.get();
      compute_histogram(*small);
      big->histogram = std::move(leaf->histogram);
      for (size_t h = 0; h < big->histogram.size(); ++h) {
        big->histogram[h].grad_sum -= small->histogram[h].grad_sum;
        big->histogram[h].count -= small->histogram[h].count;
      }

      finalize_leaf(tree, *left);
      finalize_leaf(tree, *right);
      find_best_split(*left);
      find_best_split(*right);
      if (!left->best.valid()) left->histogram.clear();    // never splits again
      if (!right->best.valid()) right->histogram.clear();
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
      ++n_leaves;
    }
    return tree;
  }

 private:
  void compute_histogram(LeafState& leaf) {
    leaf.histogram.assign(offsets_.back(), {});
    leaf.grad_sum = 0.0;
    for (uint32_t i : leaf.row_idx) leaf.grad_sum += gradients_[i];
    for (size_t f = 0; f < features_.size(); ++f) {
      const auto& bins = binned_[features_[f]];
      HistBin* hist = leaf.histogram.data() + offsets_[f];
      for (uint32_t i : leaf.row_idx) {
        HistBin& cell = hist[bins[i]];
        cell.grad_sum += gradients_[i];
        ++cell.count;
      }
    }
  }

  void finalize_leaf(GbmTree& tree, const LeafState& leaf) {
    GbmNode& node = tree.nodes[static_cast<size_t>(leaf.node)];
    node.feature = -1;
    node.value = leaf.row_idx.empty()
                     ? 0.0
                     : leaf.grad_sum / static_cast<double>(leaf.row_idx.size());
  }

  void find_best_split(LeafState& leaf) {
    leaf.best = {};
    if (leaf.depth >= params_.max_depth) return;
    const double total_sum = leaf.grad_sum;
    const auto total_count = static_cast<uint32_t>(leaf.row_idx.size());
    if (total_count < 2 * static_cast<uint32_t>(params_.min_data_in_leaf)) return;
    const double parent_score = total_sum * total_sum / total_count;

    for (size_t f = 0; f < features_.size(); ++f) {
      const size_t n_bins = offsets_[f + 1] - offsets_[f];
      const HistBin* hist = leaf.histogram.data() + offsets_[f];
      double left_sum = 0.0;
      uint32_t left_count = 0;
      for (size_t b = 0; b + 1 < n_bins; ++b) {
        left_sum += hist[b].grad_sum;
        left_count += hist[b].count;
        const uint32_t right_count = total_count - left_count;
        if (left_count < static_cast<uint32_t>(params_.min_data_in_leaf)) continue;
        if (right_count < static_cast<uint32_t>(params_.min_data_in_leaf)) break;
        const double right_sum = total_sum - left_sum;
        const double gain = left_sum * left_sum / left_count +
                            right_sum * right_sum / right_count - parent_score;
        if (gain > params_.min_split_gain && gain > leaf.best.gain) {
          leaf.best.gain = gain;
          leaf.best.feature = static_cast<int>(f);
          leaf.best.bin = static_cast<int>(b);
        }
      }
    }
  }

  const GbmParams& params_;
  const BinMapper& mapper_;
  const std::vector<std::vector<uint16_t>>& binned_;
  const std::vector<double>& gradients_;
  const std::vector<uint32_t>& features_;  // selected feature ids
  std::vector<size_t> offsets_;
};

struct BoosterMetrics {
  std::vector<double> l1;
  std::vector<double> l2;
};

GbmBooster fit_booster(const std::vector<const FeatureRow*>& rows,
                       const std::vector<std::vector<uint16_t>>& binned,
                       const BinMapper& mapper, const std::vector<double>& targets,
                       const GbmParams& params, uint64_t seed, BoosterMetrics& metrics) {
  const size_t n = rows.size();
  const size_t width = rows.front()->features.size();

  GbmBooster booster;
  booster.base = std::accumulate(targets.begin(), targets.end(), 0.0) /
                 static_cast<double>(n);

  std::vector<double> score(n, booster.base);
  std::vector<double> gradients(n, 0.0);
  Rng bagging_rng(derive_seed(seed, 1));
  Rng feature_rng(derive_seed(seed, 2));

  std::vector<uint32_t> bag(n);
  std::iota(bag.begin(), bag.end(), 0u);
  const auto bag_size =
      std::max<size_t>(1, static_cast<size_t>(std::llround(params.bagging_fraction *
                                                           static_cast<double>(n))));
  const auto feat_size =
      std::max<size_t>(1, static_cast<size_t>(std::llround(params.feature_fraction *
                                                           static_cast<double>(width))));

  for (int m = 0; m < params.num_iterations; ++m) {
    if (bag_size < n && m % std::max(1, params.bagging_freq) == 0) {
      const auto picked = bagging_rng.sample_indices(n, bag_size);
      bag.assign(picked.begin(), picked.end());
    }
    for (size_t i = 0; i < n; ++i) gradients[i] = targets[i] - score[i];

    std::vector<uint32_t> features;
    if (feat_size < width) {
      const auto picked = feature_rng.sample_indices(width, feat_size);
      features.assign(picked.begin(), picked.end());
    } else {
      features.resize(width);
      std::iota(features.begin(), features.end(), 0u);
    }

    TreeBuilder builder(params, mapper, binned, gradients, features);
    GbmTree tree = builder.build(bag);

    // Update scores for every row (the next bag may contain any of them).
    // bin(v) <= t is equivalent to v <= edges[t], so raw-value routing
    // matches the binned split exactly.
    for (size_t i = 0; i < n; ++i)
      score[i] += params.learning_rate * tree.predict(rows[i]->features);
    booster.trees.push_back(std::move(tree));

    double abs_sum = 0.0, sq_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r = targets[i] - score[i];
      abs_sum += std::abs(r);
      sq_sum += r * r;
    }
    metrics.l1.push_back(abs_sum / static_cast<double>(n));
    metrics.l2.push_back(sq_sum / static_cast<double>(n));
  }
  return booster;
}

}  // namespace

double GbmTree::predict(std::span<const double> features) const {
  int node = 0;
  while (nodes[static_cast<size_t>(node)].feature >= 0) {
    const GbmNode& nd = nodes[static_cast<size_t>(node)];
    node = features[static_cast<size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<size_t>(node)].value;
}

void validate_params(const GbmParams& params) {
  if (params.learning_rate <= 0.0) throw InvalidParams("learning_rate must be positive");
  if (params.feature_fraction <= 0.0 || params.feature_fraction > 1.0)
    throw InvalidParams("feature_fraction must be in (0, 1]");
  if (params.bagging_fraction <= 0.0 || params.bagging_fraction > 1.0)
    throw InvalidParams("bagging_fraction must be in (0, 1]");
  if (params.bagging_freq < 1) throw InvalidParams("bagging_freq must be >= 1");
  if (params.max_depth < 1) throw InvalidParams("max_depth must be >= 1");
  if (params.num_leaves < 2) throw InvalidParams("num_leaves must be >= 2");
  if (params.max_bin < 2) throw InvalidParams("max_bin must be >= 2");
  if (params.num_iterations < 0) throw InvalidParams("num_iterations must be >= 0");
  if (params.min_data_in_leaf < 1) throw InvalidParams("min_data_in_leaf must be >= 1");
}

GbmModel::GbmModel(GbmParams params, uint64_t seed) : params_(params), seed_(seed) {
  validate_params(params_);
}

void GbmModel::fit(const std::vector<FeatureRow>& rows) {
  if (rows.empty()) throw ModelError("gbm: no training rows");
  width_ = rows.front().features.size();
  for (const auto& row : rows)
    if (row.features.size() != width_) throw ModelError("gbm: ragged feature widths");

  // Canonical row order: content identity, not caller order, drives binning,
  // bagging and every accumulation.
  std::vector<const FeatureRow*> canonical(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) canonical[i] = &rows[i];
  std::sort(canonical.begin(), canonical.end(),
            [](const FeatureRow* a, const FeatureRow* b) {
              if (a->path_id != b->path_id) return a->path_id < b->path_id;
              if (a->timestamp_ms != b->timestamp_ms) return a->timestamp_ms < b->timestamp_ms;
              if (a->checkpoint_id != b->checkpoint_id)
                return a->checkpoint_id < b->checkpoint_id;
              return a->features < b->features;
            });

  const BinMapper mapper = build_bins(canonical, width_, params_.max_bin);
  std::vector<std::vector<uint16_t>> binned(width_,
                                            std::vector<uint16_t>(canonical.size()));
  for (size_t j = 0; j < width_; ++j)
    for (size_t i = 0; i < canonical.size(); ++i)
      binned[j][i] = mapper.bin_of(j, canonical[i]->features[j]);

  std::vector<double> tx(canonical.size()), ty(canonical.size());
  for (size_t i = 0; i < canonical.size(); ++i) {
    tx[i] = canonical[i]->target.x;
    ty[i] = canonical[i]->target.y;
  }

  BoosterMetrics mx, my;
  booster_x_ = fit_booster(canonical, binned, mapper, tx, params_, derive_seed(seed_, 10), mx);
  booster_y_ = fit_booster(canonical, binned, mapper, ty, params_, derive_seed(seed_, 20), my);

  metrics_.clear();
  for (size_t m = 0; m < mx.l1.size(); ++m)
    metrics_.push_back({mx.l1[m], mx.l2[m], my.l1[m], my.l2[m]});
  fitted_ = true;
}

Point2 GbmModel::predict(std::span<const double> features) const {
  if (!fitted_) throw NotFitted();
  check_width(features.size());
  double x = booster_x_.base;
  for (const auto& tree : booster_x_.trees)
    x += params_.learning_rate * tree.predict(features);
  double y = booster_y_.base;
  for (const auto& tree : booster_y_.trees)
    y += params_.learning_rate * tree.predict(features);
  return {x, y};
}

void GbmModel::restore(GbmParams params, uint64_t seed, size_t width, GbmBooster bx,
                       GbmBooster by) {
  validate_params(params);
  params_ = params;
  seed_ = seed;
  width_ = width;
  booster_x_ = std::move(bx);
  booster_y_ = std::move(by);
  metrics_.clear();
  fitted_ = true;
}

}  // namespace wifiloc
