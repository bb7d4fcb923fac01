#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "llmdetect/classifiers.hpp"
#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"
#include "training_checks.hpp"

namespace llmdetect {

namespace {

// Threshold halfway between two adjacent distinct values, kept strictly
// below `upper` so that `x <= threshold` separates them.
double midpoint(double lower, double upper) {
  const double mid = lower + (upper - lower) / 2.0;
  return mid < upper ? mid : lower;
}

// ---------------------------------------------------------------------------
// Random forest: depth-first growth of Gini trees.

class ForestTreeBuilder {
 public:
  ForestTreeBuilder(const FeatureMatrix& x, std::span<const Label> y, const RandomForestParams& params)
      : x_(x), y_(y), params_(params),
        max_features_(resolve_max_features(params.max_features, x.n_cols)),
        slot_of_(x.n_cols, -1) {}

  DecisionTree build(std::vector<std::uint32_t> items, Rng& rng) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Pending {
      std::int32_t node;
      std::vector<std::uint32_t> items;
      int depth;
    };
    std::vector<Pending> stack;
    stack.push_back({0, std::move(items), 0});

    while (!stack.empty()) {
      Pending task = std::move(stack.back());
      stack.pop_back();

      std::array<double, 2> counts{};
      for (auto row : task.items) counts[to_int(y_[row])] += 1.0;
      const double n = counts[0] + counts[1];
      tree.nodes[task.node].value = n > 0 ? counts[1] / n : 0.5;

      const bool pure = counts[0] == 0.0 || counts[1] == 0.0;
      const bool too_small = n < 2.0 * params_.min_leaf;
      const bool too_deep = params_.max_depth > 0 && task.depth >= params_.max_depth;
      if (pure || too_small || too_deep) continue;

      const auto split = best_split(task.items, counts, rng);
      if (!split) continue;

      std::vector<std::uint32_t> left, right;
      for (auto row : task.items) {
        (x_.rows[row].at(split->feature) <= split->threshold ? left : right).push_back(row);
      }
      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[task.node];
      node.feature = static_cast<std::int32_t>(split->feature);
      node.threshold = split->threshold;
      node.left = left_id;
      node.right = left_id + 1;
      stack.push_back({left_id + 1, std::move(right), task.depth + 1});
      stack.push_back({left_id, std::move(left), task.depth + 1});
    }
    return tree;
  }

 private:
  struct Cell {
    double value;
    Label label;
  };
  struct Split {
    std::uint32_t feature;
    double threshold;
  };

  std::optional<Split> best_split(const std::vector<std::uint32_t>& items,
                                  const std::array<double, 2>& counts, Rng& rng) {
    // Gather nonzero values per feature present in this node.
    touched_.clear();
    for (auto row : items) {
      for (const auto& e : x_.rows[row].entries()) {
        auto& slot = slot_of_[e.index];
        if (slot < 0) {
          slot = static_cast<std::int32_t>(touched_.size());
          touched_.push_back(e.index);
          if (buckets_.size() < touched_.size()) buckets_.emplace_back();
          buckets_[slot].clear();
        }
        buckets_[slot].push_back({e.value, y_[row]});
      }
    }

    // Features taking one value across the node cannot split it and are not
    // counted toward max_features.
    eligible_.clear();
    for (std::size_t s = 0; s < touched_.size(); ++s) {
      const auto& bucket = buckets_[s];
      bool varies = bucket.size() < items.size();
      for (std::size_t i = 1; !varies && i < bucket.size(); ++i) varies = bucket[i].value != bucket[0].value;
      if (varies) eligible_.push_back(touched_[s]);
    }
    std::sort(eligible_.begin(), eligible_.end());

    const double n = counts[0] + counts[1];
    std::optional<Split> best;
    double best_impurity = std::numeric_limits<double>::infinity();
    const std::size_t draws = std::min(max_features_, eligible_.size());
    for (std::size_t k = 0; k < draws; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng.uniform_index(eligible_.size() - k));
      std::swap(eligible_[k], eligible_[pick]);
      const auto feature = eligible_[k];
      auto& bucket = buckets_[slot_of_[feature]];
      std::sort(bucket.begin(), bucket.end(),
                [](const Cell& a, const Cell& b) { return a.value < b.value; });

      // Rows without an entry hold 0; merge them as one group in value order.
      std::array<double, 2> zero = counts;
      for (const auto& c : bucket) zero[to_int(c.label)] -= 1.0;
      const bool has_zero = zero[0] + zero[1] > 0.0;

      std::array<double, 2> left{};
      bool have_last = false, zero_done = !has_zero;
      double last = 0.0;
      auto consider = [&](double upper) {
        const double n_left = left[0] + left[1];
        const double n_right = n - n_left;
        if (n_left < params_.min_leaf || n_right < params_.min_leaf) return;
        const double impurity =
            (n_left * gini_impurity(left[0], left[1]) +
             n_right * gini_impurity(counts[0] - left[0], counts[1] - left[1])) / n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best = Split{feature, midpoint(last, upper)};
        }
      };
      auto add_zero_group = [&] {
        if (have_last) consider(0.0);
        left[0] += zero[0];
        left[1] += zero[1];
        last = 0.0;
        have_last = true;
        zero_done = true;
      };
      for (const auto& c : bucket) {
        if (!zero_done && c.value > 0.0) add_zero_group();
        if (have_last && c.value > last) consider(c.value);
        left[to_int(c.label)] += 1.0;
        last = c.value;
        have_last = true;
      }
      if (!zero_done) add_zero_group();
    }

    for (auto f : touched_) slot_of_[f] = -1;
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const Label> y_;
  const RandomForestParams& params_;
  std::size_t max_features_;
  std::vector<std::int32_t> slot_of_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint32_t> eligible_;
  std::vector<std::vector<Cell>> buckets_;
};

// ---------------------------------------------------------------------------
// Newton boosting: level-wise exact greedy growth over pre-sorted columns.

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

class BoostedTreeBuilder {
 public:
  BoostedTreeBuilder(const FeatureMatrix& x, const SortedColumns& columns, const BoostedTreesParams& params)
      : x_(x), columns_(columns), params_(params) {}

  // Grows one tree for the given gradients; node_of_row receives each row's leaf.
  DecisionTree grow(std::span<const double> g, std::span<const double> h,
                    std::vector<std::int32_t>& node_of_row) {
    const std::size_t n = g.size();
    DecisionTree tree;
    tree.nodes.emplace_back();
    node_of_row.assign(n, 0);
    node_of_row_ = node_of_row;
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
      stats[0].g += g[i];
      stats[0].h += h[i];
      ++stats[0].count;
    }

    std::vector<std::int32_t> frontier{0};
    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      std::vector<char> expandable(tree.nodes.size(), 0);
      for (auto k : frontier) expandable[k] = 1;
      auto best = find_splits(g, h, stats, expandable);

      std::vector<std::int32_t> next;
      for (auto k : frontier) {
        if (best[k].feature < 0 || !(best[k].gain > kMinGain)) continue;
        const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[k];
        node.feature = best[k].feature;
        node.threshold = best[k].threshold;
        node.left = left_id;
        node.right = left_id + 1;
        next.push_back(left_id);
        next.push_back(left_id + 1);
      }
      if (next.empty()) break;

      stats.resize(tree.nodes.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& node = tree.nodes[node_of_row[i]];
        if (node.is_leaf()) continue;
        const bool go_left = x_.rows[i].at(static_cast<std::uint32_t>(node.feature)) <= node.threshold;
        const auto child = go_left ? node.left : node.right;
        node_of_row[i] = child;
        stats[child].g += g[i];
        stats[child].h += h[i];
        ++stats[child].count;
      }
      frontier = std::move(next);
    }

    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      tree.nodes[k].value = leaf_weight(stats[k].g, stats[k].h, params_.lambda);
    }
    return tree;
  }

 private:
  static constexpr double kMinGain = 1e-12;

  struct SweepState {
    NodeStats present;
    double g_left = 0.0;
    double h_left = 0.0;
    double last = 0.0;
    bool have_last = false;
    bool zero_done = false;
    bool touched = false;
  };

  std::vector<SplitCandidate> find_splits(std::span<const double> g, std::span<const double> h,
                                          const std::vector<NodeStats>& stats,
                                          const std::vector<char>& expandable) {
    const std::size_t n_nodes = stats.size();
    std::vector<SplitCandidate> best(n_nodes);
    std::vector<SweepState> state(n_nodes);
    std::vector<std::int32_t> touched;

    for (std::size_t f = 0; f < columns_.columns.size(); ++f) {
      const auto& column = columns_.columns[f];
      if (column.empty()) continue;

      touched.clear();
      for (const auto& cell : column) {
        const auto k = node_of_row_[cell.row];
        if (!expandable[k]) continue;
        auto& st = state[k];
        if (!st.touched) {
          st = SweepState{};
          st.touched = true;
          touched.push_back(k);
        }
        st.present.g += g[cell.row];
        st.present.h += h[cell.row];
        ++st.present.count;
      }

      auto consider = [&](std::int32_t k, double upper) {
        const auto& st = state[k];
        const auto& total = stats[k];
        const double g_right = total.g - st.g_left;
        const double h_right = total.h - st.h_left;
        if (st.h_left < params_.min_child_weight || h_right < params_.min_child_weight) return;
        const double gain = split_gain(st.g_left, st.h_left, g_right, h_right, params_.lambda);
        if (gain > best[k].gain) {
          best[k] = {gain, static_cast<std::int32_t>(f), midpoint(st.last, upper)};
        }
      };
      auto add_zero_group = [&](std::int32_t k) {
        auto& st = state[k];
        const auto& total = stats[k];
        if (total.count > st.present.count) {
          if (st.have_last) consider(k, 0.0);
          st.g_left += total.g - st.present.g;
          st.h_left += total.h - st.present.h;
          st.last = 0.0;
          st.have_last = true;
        }
        st.zero_done = true;
      };

      for (const auto& cell : column) {
        const auto k = node_of_row_[cell.row];
        if (!expandable[k]) continue;
        auto& st = state[k];
        if (!st.zero_done && cell.value > 0.0) add_zero_group(k);
        if (st.have_last && cell.value > st.last) consider(k, cell.value);
        st.g_left += g[cell.row];
        st.h_left += h[cell.row];
        st.last = cell.value;
        st.have_last = true;
      }
      for (auto k : touched) {
        if (!state[k].zero_done) add_zero_group(k);
        state[k].touched = false;
      }
    }
    return best;
  }

 private:
  std::span<const std::int32_t> node_of_row_;
  const FeatureMatrix& x_;
  const SortedColumns& columns_;
  const BoostedTreesParams& params_;
};

double mean_logloss(std::span<const double> logits, std::span<const Label> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += logloss_from_logit(logits[i], to_double(y[i]));
  return sum / static_cast<double>(logits.size());
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(const SparseVector& x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& node = nodes[k];
    k = static_cast<std::size_t>(
        x.at(static_cast<std::uint32_t>(node.feature)) <= node.threshold ? node.left : node.right);
  }
  return nodes[k];
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    deepest = std::max(deepest, level[k]);
    if (!nodes[k].is_leaf()) {
      level[static_cast<std::size_t>(nodes[k].left)] = level[k] + 1;
      level[static_cast<std::size_t>(nodes[k].right)] = level[k] + 1;
    }
  }
  return deepest;
}

double BoostedTreesModel::logit(const SparseVector& x) const {
  double z = base_logit;
  for (const auto& tree : trees) z += learning_rate * tree.leaf_for(x).value;
  return z;
}

double gini_impurity(double w_human, double w_ai) noexcept {
  const double n = w_human + w_ai;
  if (n <= 0.0) return 0.0;
  const double p0 = w_human / n;
  const double p1 = w_ai / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda) noexcept {
  const double g = g_left + g_right;
  const double h = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) -
                g * g / (h + lambda));
}

TrainedModel fit_random_forest(const FeatureMatrix& x, std::span<const Label> y,
                               const RandomForestParams& params, std::uint64_t seed) {
  ClassifierSpec spec{params, seed};
  spec.validate();
  const auto class_counts = detail::check_training_data(x, y);
  const auto n = static_cast<std::uint32_t>(x.n_rows());

  RandomForestModel model;
  ForestTreeBuilder builder(x, y, params);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::uint32_t> items(n);
    if (params.bootstrap) {
      for (auto& item : items) item = static_cast<std::uint32_t>(rng.uniform_index(n));
      std::sort(items.begin(), items.end());
    } else {
      std::iota(items.begin(), items.end(), 0u);
    }
    model.trees.push_back(builder.build(std::move(items), rng));
  }

  TrainingSummary summary;
  summary.n_samples = x.n_rows();
  summary.class_counts = class_counts;
  summary.iterations = params.n_trees;
  summary.converged = true;
  return TrainedModel(std::move(spec), std::move(model), x.n_cols, std::move(summary));
}

TrainedModel fit_gradient_boosted_trees(const FeatureMatrix& x, std::span<const Label> y,
                                        const BoostedTreesParams& params) {
  ClassifierSpec spec{params, 0};
  spec.validate();
  const auto class_counts = detail::check_training_data(x, y);
  const std::size_t n = x.n_rows();

  const auto columns = SortedColumns::build(x);
  BoostedTreesModel model;
  model.learning_rate = params.learning_rate;
  model.base_logit = 0.0;

  std::vector<double> logits(n, model.base_logit), g(n), h(n);
  std::vector<std::int32_t> node_of_row;
  BoostedTreeBuilder builder(x, columns, params);
  TrainingSummary summary;
  summary.loss_history.push_back(mean_logloss(logits, y));

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(logits[i]);
      g[i] = p - to_double(y[i]);
      h[i] = p * (1.0 - p);
      if (!std::isfinite(g[i]) || !std::isfinite(h[i])) {
        throw Error(ErrorKind::NonFinite, "non-finite gradient in round " + std::to_string(round));
      }
    }
    auto tree = builder.grow(g, h, node_of_row);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] += model.learning_rate * tree.nodes[static_cast<std::size_t>(node_of_row[i])].value;
    }
    model.trees.push_back(std::move(tree));
    summary.loss_history.push_back(mean_logloss(logits, y));
  }

  summary.n_samples = n;
  summary.class_counts = class_counts;
  summary.iterations = params.n_rounds;
  summary.converged = true;
  summary.final_loss = summary.loss_history.back();
  return TrainedModel(std::move(spec), std::move(model), x.n_cols, std::move(summary));
}

}  // namespace llmdetect
