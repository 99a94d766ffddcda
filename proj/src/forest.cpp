#include "overthink/forest.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "overthink/errors.hpp"
#include "overthink/seeded.hpp"

namespace overthink {

int DecisionTree::predict(const FeatureRow& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    at = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  const auto& leaf = nodes[static_cast<std::size_t>(at)];
  return leaf.counts[1] > leaf.counts[0] ? 1 : 0;
}

int DecisionTree::depth() const {
  // Nodes are appended parent-before-child, so one forward pass suffices.
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

int ForestModel::predict(const FeatureRow& x) const {
  std::size_t votes = 0;
  for (const auto& t : trees) votes += static_cast<std::size_t>(t.predict(x));
  return 2 * votes > trees.size() ? 1 : 0;
}

LabelVector ForestModel::predict(const FeatureMatrix& x) const {
  LabelVector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(FeatureRow(x.row(i)));
  return out;
}

void ForestModel::validate() const {
  if (n_trees < 1 || trees.size() != n_trees) throw std::invalid_argument("forest tree count mismatch");
  for (const auto& t : trees) {
    if (t.nodes.empty()) throw std::invalid_argument("forest contains an empty tree");
    const auto n = static_cast<int>(t.nodes.size());
    for (const auto& node : t.nodes) {
      if (node.feature < 0) continue;
      if (node.feature >= kFeatureDims) throw std::invalid_argument("split feature index out of range");
      if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n) {
        throw std::invalid_argument("child index out of range");
      }
    }
  }
}

namespace {

double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n == 0.0) return 0.0;
  const double p0 = n0 / n;
  const double p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const LabelVector& y, const ForestParams& params, SeededRng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {}

  DecisionTree build(std::vector<Eigen::Index> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<Eigen::Index> rows, int depth) {
    TreeNode node;
    for (auto r : rows) ++node.counts[static_cast<std::size_t>(y_(r))];
    const auto index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    if (pure || depth >= params_.max_depth || rows.size() < 2) return index;

    const auto split = find_split(rows);
    if (split.feature < 0) return index;

    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    for (auto r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& stored = tree_.nodes[static_cast<std::size_t>(index)];
    stored.feature = split.feature;
    stored.threshold = split.threshold;
    stored.left = l;
    stored.right = r;
    return index;
  }

  Split best_on_feature(const std::vector<Eigen::Index>& rows, int feature) const {
    std::vector<std::pair<double, int>> values;
    values.reserve(rows.size());
    for (auto r : rows) values.emplace_back(x_(r, feature), y_(r));
    std::sort(values.begin(), values.end());

    double total[2] = {0, 0};
    for (const auto& v : values) total[v.second] += 1;
    double left[2] = {0, 0};
    const double n = static_cast<double>(values.size());
    Split best;
    for (std::size_t i = 1; i < values.size(); ++i) {
      left[values[i - 1].second] += 1;
      if (!(values[i - 1].first < values[i].first)) continue;
      const double nl = left[0] + left[1];
      const double nr = n - nl;
      const double impurity = (nl * gini(left[0], left[1]) + nr * gini(total[0] - left[0], total[1] - left[1])) / n;
      if (best.feature < 0 || impurity < best.impurity) {
        double mid = 0.5 * (values[i - 1].first + values[i].first);
        if (!(mid < values[i].first)) mid = values[i - 1].first;
        best = Split{feature, mid, impurity};
      }
    }
    return best;
  }

  Split find_split(const std::vector<Eigen::Index>& rows) {
    std::vector<int> order(kFeatureDims);
    std::iota(order.begin(), order.end(), 0);
    // Partial shuffle: the first features_per_split entries are the draw.
    const auto k = static_cast<std::size_t>(std::clamp(params_.features_per_split, 1, kFeatureDims));
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(kFeatureDims - i));
      std::swap(order[i], order[j]);
    }

    Split best;
    auto consider = [&](int feature) {
      const auto s = best_on_feature(rows, feature);
      if (s.feature >= 0 && (best.feature < 0 || s.impurity < best.impurity)) best = s;
    };
    for (std::size_t i = 0; i < k; ++i) consider(order[i]);
    // Sampled features all constant here: fall back to the rest.
    for (std::size_t i = k; best.feature < 0 && i < order.size(); ++i) consider(order[i]);
    return best;
  }

  const FeatureMatrix& x_;
  const LabelVector& y_;
  const ForestParams& params_;
  SeededRng& rng_;
  DecisionTree tree_;
};

DecisionTree train_tree(const FeatureMatrix& x, const LabelVector& y, const ForestParams& params, std::size_t index) {
  SeededRng rng(derive_seed(params.seed, index));
  const auto n = static_cast<std::uint64_t>(x.rows());
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(n));
  return TreeBuilder(x, y, params, rng).build(std::move(rows));
}

}  // namespace

ForestModel train_forest(const FeatureMatrix& x, const LabelVector& y, const ForestParams& params) {
  if (params.n_trees < 1) throw ConfigError("forest needs at least one tree");
  if (params.max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (x.rows() != y.size()) throw TrainingError("feature and label counts differ");
  if (x.rows() < 4) throw TrainingError(fmt::format("need at least 4 training rows, got {}", x.rows()));
  if (!x.allFinite()) throw TrainingError("training features contain non-finite values");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0 && y(i) != 1) throw TrainingError("labels must be 0 or 1");
  }
  const auto positives = y.sum();
  if (positives == 0 || positives == y.size()) throw TrainingError("training data holds a single class");
  bool all_identical = true;
  for (Eigen::Index i = 1; i < x.rows() && all_identical; ++i) all_identical = x.row(i) == x.row(0);
  if (all_identical) {
    throw TrainingError("every training row has identical features but labels differ; classes are inseparable");
  }

  ForestModel model;
  model.n_trees = params.n_trees;
  model.max_depth = params.max_depth;
  model.seed = params.seed;
  model.trees.resize(params.n_trees);

  const std::size_t workers =
      std::min<std::size_t>(params.n_trees, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < params.n_trees; ++i) model.trees[i] = train_tree(x, y, params, i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < params.n_trees; i += workers) model.trees[i] = train_tree(x, y, params, i);
      });
    }
  }
  return model;
}

double accuracy(const LabelVector& predicted, const LabelVector& truth) {
  if (predicted.size() != truth.size() || truth.size() == 0) {
    throw std::invalid_argument("accuracy needs equal, non-empty label vectors");
  }
  return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

std::string forest_to_json(const ForestModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "overthink-forest";
  j["version"] = kForestFormatVersion;
  j["n_trees"] = model.n_trees;
  j["max_depth"] = model.max_depth;
  j["seed"] = model.seed;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) {
    nlohmann::ordered_json feature = nlohmann::ordered_json::array();
    nlohmann::ordered_json threshold = nlohmann::ordered_json::array();
    nlohmann::ordered_json left = nlohmann::ordered_json::array();
    nlohmann::ordered_json right = nlohmann::ordered_json::array();
    nlohmann::ordered_json counts = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      counts.push_back({n.counts[0], n.counts[1]});
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"counts", counts}});
  }
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

ForestModel forest_from_json(std::string_view text) {
  ForestModel model;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "overthink-forest") throw InputError("not a forest model document");
    if (j.at("version").get<int>() != kForestFormatVersion) {
      throw InputError(fmt::format("unsupported forest model version {}", j.at("version").dump()));
    }
    model.n_trees = j.at("n_trees").get<std::size_t>();
    model.max_depth = j.at("max_depth").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      const auto& feature = jt.at("feature");
      t.nodes.resize(feature.size());
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        auto& n = t.nodes[i];
        n.feature = feature.at(i).get<int>();
        n.threshold = jt.at("threshold").at(i).get<double>();
        n.left = jt.at("left").at(i).get<int>();
        n.right = jt.at("right").at(i).get<int>();
        n.counts = {jt.at("counts").at(i).at(0).get<std::uint32_t>(), jt.at("counts").at(i).at(1).get<std::uint32_t>()};
      }
      model.trees.push_back(std::move(t));
    }
    model.validate();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed forest model: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw InputError(fmt::format("invalid forest model: {}", e.what()));
  }
  return model;
}

}  // namespace overthink
