#include "tangled/shap.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <string>

#include "tangled/error.hpp"
#include "tangled/parallel.hpp"

namespace tangled {
namespace {

// Path-dependent TreeSHAP bookkeeping, one entry per unique feature on the
// current root-to-node path.
struct PathElement {
  std::int32_t feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void extend_path(PathElement* path, std::size_t depth, double zero_fraction,
                 double one_fraction, std::int32_t feature) {
  path[depth] = PathElement{feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double d1 = static_cast<double>(depth + 1);
  for (std::size_t k = depth; k-- > 0;) {
    path[k + 1].weight += one_fraction * path[k].weight * static_cast<double>(k + 1) / d1;
    path[k].weight = zero_fraction * path[k].weight * static_cast<double>(depth - k) / d1;
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].weight;
  for (std::size_t k = depth; k-- > 0;) {
    if (one_fraction != 0.0) {
      const double tmp = path[k].weight;
      path[k].weight = next_one * d1 / (static_cast<double>(k + 1) * one_fraction);
      next_one = tmp - path[k].weight * zero_fraction * static_cast<double>(depth - k) / d1;
    } else {
      path[k].weight = path[k].weight * d1 / (zero_fraction * static_cast<double>(depth - k));
    }
  }
  for (std::size_t k = index; k < depth; ++k) {
    path[k].feature = path[k + 1].feature;
    path[k].zero_fraction = path[k + 1].zero_fraction;
    path[k].one_fraction = path[k + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].weight;
  double total = 0.0;
  for (std::size_t k = depth; k-- > 0;) {
    if (one_fraction != 0.0) {
      const double tmp = next_one * d1 / (static_cast<double>(k + 1) * one_fraction);
      total += tmp;
      next_one = path[k].weight - tmp * zero_fraction * static_cast<double>(depth - k) / d1;
    } else if (zero_fraction != 0.0) {
      total += path[k].weight / zero_fraction / (static_cast<double>(depth - k) / d1);
    }
  }
  return total;
}

struct ShapContext {
  const std::vector<TreeNode>& nodes;
  std::span<const double> row;
  std::span<double> phi;
};

void recurse(const ShapContext& ctx, std::size_t node_index, std::size_t depth,
             PathElement* parent_path, double parent_zero, double parent_one,
             std::int32_t parent_feature) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, parent_zero, parent_one, parent_feature);

  const TreeNode& node = ctx.nodes[node_index];
  if (node.is_leaf()) {
    for (std::size_t k = 1; k <= depth; ++k) {
      const double w = unwound_path_sum(path, depth, k);
      const PathElement& el = path[k];
      ctx.phi[static_cast<std::size_t>(el.feature)] +=
          w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const bool go_left = ctx.row[static_cast<std::size_t>(node.feature)] <= node.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? node.left : node.right);
  const auto cold = static_cast<std::size_t>(go_left ? node.right : node.left);
  const double hot_zero = ctx.nodes[hot].cover / node.cover;
  const double cold_zero = ctx.nodes[cold].cover / node.cover;
  double incoming_zero = 1.0;
  double incoming_one = 1.0;

  // A feature already on the path is unwound and re-extended here.
  std::size_t k = 0;
  for (; k <= depth; ++k) {
    if (path[k].feature == node.feature) break;
  }
  if (k != depth + 1) {
    incoming_zero = path[k].zero_fraction;
    incoming_one = path[k].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }
  recurse(ctx, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, node.feature);
  recurse(ctx, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
}

void require_cover(const RegressionTree& tree) {
  for (const auto& node : tree.nodes()) {
    if (!(node.cover > 0.0)) throw DataError("TreeSHAP needs cover statistics on every node");
  }
}

}  // namespace

void tree_shap(const RegressionTree& tree, std::span<const double> row, std::span<double> phi) {
  const std::size_t depth = tree.depth();
  std::vector<PathElement> buffer((depth + 2) * (depth + 3) / 2 + depth + 2);
  recurse(ShapContext{tree.nodes(), row, phi}, 0, 0, buffer.data(), 1.0, 1.0, -1);
}

namespace {

// The distinct split features on the path to the current node, in the order
// they first appear, and the product of cover ratios per feature.
struct LeafPath {
  double value = 0.0;
  std::vector<std::int32_t> features;
  std::vector<double> zero;
};

// Contribution of one leaf to each of its path features when the row
// satisfies exactly the features whose bit is set in `mask`.
void leaf_contribution(const LeafPath& leaf, std::uint32_t mask, PathElement* path,
                       double* out) {
  const std::size_t d = leaf.features.size();
  extend_path(path, 0, 1.0, 1.0, -1);
  for (std::size_t k = 0; k < d; ++k) {
    extend_path(path, k + 1, leaf.zero[k], (mask >> k) & 1u ? 1.0 : 0.0, leaf.features[k]);
  }
  for (std::size_t k = 1; k <= d; ++k) {
    const double w = unwound_path_sum(path, d, k);
    out[k - 1] = w * (path[k].one_fraction - path[k].zero_fraction) * leaf.value;
  }
}

std::size_t widest_path(const std::vector<TreeNode>& nodes, std::size_t index,
                        std::vector<std::int32_t>& features) {
  const TreeNode& node = nodes[index];
  if (node.is_leaf()) return features.size();
  const bool added =
      std::find(features.begin(), features.end(), node.feature) == features.end();
  if (added) features.push_back(node.feature);
  const std::size_t widest =
      std::max(widest_path(nodes, static_cast<std::size_t>(node.left), features),
               widest_path(nodes, static_cast<std::size_t>(node.right), features));
  if (added) features.pop_back();
  return widest;
}

constexpr std::size_t kMaxTableFeatures = 24;
constexpr std::size_t kDirectLookupFeatures = 12;
constexpr std::size_t kRowBlock = 2048;

// Walks one tree for a block of rows. Each row carries a mask with one bit per
// path feature, cleared once the row leaves that feature's interval; a leaf is
// evaluated once per distinct mask among the rows.
class TableWalk {
 public:
  TableWalk(const RegressionTree& tree, const Matrix& x, std::size_t first, std::size_t last,
            double* acc)
      : nodes_(tree.nodes()), x_(x), first_(first), rows_(last - first), acc_(acc),
        masks_(tree.depth() + 1, std::vector<std::uint32_t>(rows_, 0u)),
        path_(kMaxTableFeatures + 2),
        index_(std::size_t{1} << kDirectLookupFeatures, 0u) {}

  void run() { descend(0, 0); }

 private:
  void descend(std::size_t index, std::size_t level) {
    const TreeNode& node = nodes_[index];
    if (node.is_leaf()) {
      leaf_.value = node.value;
      emit(masks_[level]);
      return;
    }
    std::size_t k = 0;
    while (k < leaf_.features.size() && leaf_.features[k] != node.feature) ++k;
    const bool added = k == leaf_.features.size();
    if (added) {
      leaf_.features.push_back(node.feature);
      leaf_.zero.push_back(1.0);
    }
    const std::uint32_t bit = 1u << k;
    const double* column = x_.data() + static_cast<std::ptrdiff_t>(node.feature) * x_.rows() +
                           static_cast<std::ptrdiff_t>(first_);
    const auto& parent = masks_[level];
    auto& child = masks_[level + 1];
    const double saved = leaf_.zero[k];
    for (const bool left : {true, false}) {
      for (std::size_t r = 0; r < rows_; ++r) {
        const std::uint32_t keep = added ? parent[r] | bit : parent[r];
        child[r] = (column[r] <= node.threshold) == left ? keep : keep & ~bit;
      }
      const auto next = static_cast<std::size_t>(left ? node.left : node.right);
      leaf_.zero[k] = saved * (nodes_[next].cover / node.cover);
      descend(next, level + 1);
    }
    leaf_.zero[k] = saved;
    if (added) {
      leaf_.features.pop_back();
      leaf_.zero.pop_back();
    }
  }

  void emit(const std::vector<std::uint32_t>& masks) {
    const std::size_t d = leaf_.features.size();
    if (d == 0) return;
    slot_.resize(rows_);
    table_.clear();
    if (d <= kDirectLookupFeatures) {
      touched_.clear();
      for (std::size_t r = 0; r < rows_; ++r) {
        std::uint32_t& entry = index_[masks[r]];
        if (entry == 0) {
          touched_.push_back(masks[r]);
          entry = static_cast<std::uint32_t>(touched_.size());
          add_row(masks[r]);
        }
        slot_[r] = entry - 1;
      }
      for (std::uint32_t mask : touched_) index_[mask] = 0;
    } else {
      keys_.assign(masks.begin(), masks.end());
      std::sort(keys_.begin(), keys_.end());
      keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
      for (std::uint32_t mask : keys_) add_row(mask);
      for (std::size_t r = 0; r < rows_; ++r) {
        slot_[r] = static_cast<std::uint32_t>(
            std::lower_bound(keys_.begin(), keys_.end(), masks[r]) - keys_.begin());
      }
    }
    const std::size_t m = static_cast<std::size_t>(x_.cols());
    for (std::size_t r = 0; r < rows_; ++r) {
      double* phi = acc_ + (first_ + r) * m;
      const double* contribution = table_.data() + slot_[r] * d;
      for (std::size_t k = 0; k < d; ++k) {
        phi[static_cast<std::size_t>(leaf_.features[k])] += contribution[k];
      }
    }
  }

  void add_row(std::uint32_t mask) {
    const std::size_t d = leaf_.features.size();
    table_.resize(table_.size() + d);
    leaf_contribution(leaf_, mask, path_.data(), table_.data() + table_.size() - d);
  }

  const std::vector<TreeNode>& nodes_;
  const Matrix& x_;
  std::size_t first_;
  std::size_t rows_;
  double* acc_;
  std::vector<std::vector<std::uint32_t>> masks_;
  std::vector<PathElement> path_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint32_t> touched_;
  std::vector<std::uint32_t> keys_;
  std::vector<std::uint32_t> slot_;
  std::vector<double> table_;
  LeafPath leaf_;
};

// Adds one tree's SHAP values for rows [first, last) into `acc` (row-major,
// m per row).
void accumulate_tree(const RegressionTree& tree, const Matrix& x, std::size_t first,
                     std::size_t last, std::vector<double>& acc) {
  const auto& nodes = tree.nodes();
  const std::size_t m = static_cast<std::size_t>(x.cols());
  std::vector<std::int32_t> features;
  if (widest_path(nodes, 0, features) <= kMaxTableFeatures) {
    TableWalk(tree, x, first, last, acc.data()).run();
    return;
  }
  const std::size_t depth = tree.depth();
  std::vector<PathElement> buffer((depth + 2) * (depth + 3) / 2 + depth + 2);
  std::vector<double> row(m);
  for (std::size_t i = first; i < last; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    recurse(ShapContext{nodes, row, std::span<double>(acc.data() + i * m, m)}, 0, 0,
            buffer.data(), 1.0, 1.0, -1);
  }
}

}  // namespace

ShapMatrix tree_shap(const RegressionForest& forest, const Matrix& x, std::size_t threads) {
  if (static_cast<std::size_t>(x.cols()) != forest.feature_count) {
    throw DataError("SHAP input has " + std::to_string(x.cols()) + " columns, forest expects " +
                    std::to_string(forest.feature_count));
  }
  for (const auto& tree : forest.trees) require_cover(tree);
  const std::size_t m = forest.feature_count;
  const auto n = static_cast<std::size_t>(x.rows());
  const double inv_trees = 1.0 / static_cast<double>(forest.trees.size());

  ShapMatrix out;
  out.values = Matrix::Zero(x.rows(), x.cols());
  for (const auto& tree : forest.trees) out.base_value += tree.root().value;
  out.base_value *= inv_trees;

  // Every row block sums its trees in forest order, so the values do not
  // depend on how blocks are scheduled.
  const std::size_t per_thread = (n + std::max<std::size_t>(threads, 1) - 1) /
                                 std::max<std::size_t>(threads, 1);
  const std::size_t block = std::clamp<std::size_t>(per_thread, 1, kRowBlock);
  const std::size_t blocks = (n + block - 1) / block;
  std::vector<double> acc(n * m, 0.0);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t first = b * block;
    const std::size_t last = std::min(n, first + block);
    for (const auto& tree : forest.trees) accumulate_tree(tree, x, first, last, acc);
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          acc[i * m + j] * inv_trees;
    }
  }
  return out;
}

namespace {

double conditional_expectation(const std::vector<TreeNode>& nodes, std::size_t index,
                               std::span<const double> row, std::uint32_t coalition) {
  const TreeNode& node = nodes[index];
  if (node.is_leaf()) return node.value;
  const auto left = static_cast<std::size_t>(node.left);
  const auto right = static_cast<std::size_t>(node.right);
  if (coalition & (1u << node.feature)) {
    return conditional_expectation(
        nodes, row[static_cast<std::size_t>(node.feature)] <= node.threshold ? left : right, row,
        coalition);
  }
  return (nodes[left].cover * conditional_expectation(nodes, left, row, coalition) +
          nodes[right].cover * conditional_expectation(nodes, right, row, coalition)) /
         node.cover;
}

}  // namespace

std::vector<double> brute_force_shapley(const RegressionTree& tree, std::span<const double> row,
                                        std::size_t feature_count) {
  if (feature_count > 12) throw ConfigError("brute-force Shapley supports at most 12 features");
  if (row.size() < feature_count) throw DataError("row shorter than the feature count");
  require_cover(tree);
  const std::uint32_t subsets = 1u << feature_count;
  std::vector<double> value(subsets);
  for (std::uint32_t s = 0; s < subsets; ++s) {
    value[s] = conditional_expectation(tree.nodes(), 0, row, s);
  }
  // weight[k] = k! (m - k - 1)! / m!
  const std::size_t m = feature_count;
  std::vector<double> weight(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    weight[k] = std::exp(std::lgamma(static_cast<double>(k + 1)) +
                         std::lgamma(static_cast<double>(m - k)) -
                         std::lgamma(static_cast<double>(m + 1)));
  }
  std::vector<double> phi(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      phi[j] += weight[size] * (value[s | bit] - value[s]);
    }
  }
  return phi;
}

ImportanceVector mean_abs_shap(const ShapMatrix& shap) {
  std::vector<double> raw(static_cast<std::size_t>(shap.values.cols()), 0.0);
  if (shap.values.rows() > 0) {
    for (Eigen::Index j = 0; j < shap.values.cols(); ++j) {
      raw[static_cast<std::size_t>(j)] = shap.values.col(j).cwiseAbs().sum() /
                                         static_cast<double>(shap.values.rows());
    }
  }
  return ImportanceVector::normalized(std::move(raw));
}

ShapMatrix linear_shap(const Vector& coefficients, const Vector& feature_means, double intercept,
                       const Matrix& x) {
  if (coefficients.size() != x.cols() || feature_means.size() != x.cols()) {
    throw DataError("linear SHAP: model width does not match the data");
  }
  ShapMatrix out;
  out.values = (x.rowwise() - feature_means.transpose()).array().rowwise() *
               coefficients.transpose().array();
  out.base_value = intercept + feature_means.dot(coefficients);
  return out;
}

}  // namespace tangled
