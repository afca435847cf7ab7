#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tangled/ingest.hpp"

namespace tangled {

struct ForestParams {
  std::size_t n_trees = 100;
  /// Features sampled per split. Unset means max(1, floor(m / 3)) for the
  /// width m of whatever design the forest is fitted on; an explicit value is
  /// capped at m.
  std::optional<std::size_t> mtry;
  std::size_t min_samples_leaf = 5;
  std::optional<std::size_t> max_depth;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  std::size_t resolved_mtry(std::size_t m) const;
  void validate() const;
};

/// One node of a regression tree. Internal nodes send x left iff
/// x[feature] <= threshold. `cover` is the number of training samples that
/// reached the node (bootstrap duplicates counted) and `value` their mean
/// target; for leaves `value` is the prediction.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double cover = 0.0;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

/// Flat preorder node array; node 0 is the root.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const;
  std::size_t depth() const;
  bool uses_feature(std::size_t feature) const;

  /// Checks structural invariants (child links, cover additivity, feature
  /// range). Throws DataError.
  void validate(std::size_t feature_count) const;

 private:
  std::vector<TreeNode> nodes_;
};

struct RegressionForest {
  std::vector<RegressionTree> trees;
  ForestParams params;
  std::size_t feature_count = 0;
  /// Rows left out of each tree's bootstrap sample (empty without bootstrap).
  std::vector<IndexList> oob_indices;

  double predict_row(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;
  void validate() const;
};

struct ImportanceVector {
  enum class Normalization { kRaw, kSumToOne };

  std::vector<double> values;
  Normalization normalization = Normalization::kRaw;

  /// Rescales to unit sum when the total is positive; otherwise leaves the
  /// (all-zero) values raw.
  static ImportanceVector normalized(std::vector<double> raw);
};

/// Fits one CART regression tree on all rows of x (no resampling).
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const ForestParams& params,
                        std::uint64_t seed);

/// Fits params.n_trees trees. Tree t draws from its own stream keyed by
/// (params.seed, t), so the result does not depend on `threads`.
RegressionForest fit_forest(const Matrix& x, std::span<const double> y,
                            const ForestParams& params, std::size_t threads = 1);

/// Mean decrease in squared error per feature, averaged over trees and
/// normalized to unit sum.
ImportanceVector impurity_importance(const RegressionForest& forest);

/// Mean increase in MSE when column j of x is permuted, over n_repeats
/// shuffles; negatives clamp to zero before normalization.
ImportanceVector permutation_importance(const RegressionForest& forest, const Matrix& x,
                                        std::span<const double> y, std::size_t n_repeats,
                                        std::uint64_t seed, std::size_t threads = 1);

/// Permutation importance measured on each tree's out-of-bag rows of the
/// training data, the classic random-forest variant. Requires a forest fitted
/// with bootstrap on (x, y).
ImportanceVector oob_permutation_importance(const RegressionForest& forest, const Matrix& x,
                                            std::span<const double> y, std::size_t n_repeats,
                                            std::uint64_t seed, std::size_t threads = 1);

}  // namespace tangled
