#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace overthink {

inline constexpr int kFeatureDims = 6;

using FeatureRow = Eigen::Matrix<double, 1, kFeatureDims>;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, kFeatureDims, Eigen::RowMajor>;
using LabelVector = Eigen::VectorXi;

/// Flat binary tree node. `feature < 0` marks a leaf; otherwise rows with
/// x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::uint32_t, 2> counts{0, 0};  // training labels reaching this node

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Majority class of the reached leaf; ties go to 0.
  int predict(const FeatureRow& x) const;
  int depth() const;

  bool operator==(const DecisionTree&) const = default;
};

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = 8;
  std::uint64_t seed = 0;
  /// Features tried per split: ceil(sqrt(6)).
  int features_per_split = 3;
};

/// Bagged CART classifier for the two-class stylometry problem.
struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_trees = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;

  /// Majority vote over trees; a tied vote predicts 0.
  int predict(const FeatureRow& x) const;
  LabelVector predict(const FeatureMatrix& x) const;

  /// Throws std::invalid_argument on structural violations.
  void validate() const;

  bool operator==(const ForestModel&) const = default;
};

/// Fits each tree on a seeded bootstrap resample with Gini splits. Tree i
/// draws from its own derived seed, so trees train in parallel and the
/// model depends only on (data, params). Needs both labels, at least four
/// rows, and rows that are not all identical; TrainingError otherwise.
ForestModel train_forest(const FeatureMatrix& x, const LabelVector& y, const ForestParams& params = {});

double accuracy(const LabelVector& predicted, const LabelVector& truth);

inline constexpr int kForestFormatVersion = 1;

/// Versioned JSON document; doubles are written round-trip exact.
std::string forest_to_json(const ForestModel& model);
ForestModel forest_from_json(std::string_view json);

}  // namespace overthink
