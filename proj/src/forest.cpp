#include "tangled/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tangled/error.hpp"
#include "tangled/parallel.hpp"
#include "tangled/random.hpp"

namespace tangled {

std::size_t ForestParams::resolved_mtry(std::size_t m) const {
  if (m == 0) return 0;
  if (mtry) return std::clamp<std::size_t>(*mtry, 1, m);
  return std::max<std::size_t>(1, m / 3);
}

void ForestParams::validate() const {
  if (n_trees == 0) throw ConfigError("n_trees must be >= 1");
  if (mtry && *mtry == 0) throw ConfigError("mtry must be >= 1");
  if (min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DataError("a tree needs at least one node");
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return i;
}

double RegressionTree::predict(std::span<const double> row) const {
  return nodes_[leaf_index(row)].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Preorder layout: parents precede children.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

bool RegressionTree::uses_feature(std::size_t feature) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const TreeNode& n) {
    return !n.is_leaf() && static_cast<std::size_t>(n.feature) == feature;
  });
}

void RegressionTree::validate(std::size_t feature_count) const {
  const auto count = static_cast<std::int32_t>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (std::int32_t i = 0; i < count; ++i) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(i)];
    if (!std::isfinite(node.value) || !(node.cover > 0.0)) {
      throw DataError("tree node " + std::to_string(i) + " lacks cover or value statistics");
    }
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= feature_count) {
      throw DataError("tree node " + std::to_string(i) + " references feature outside range");
    }
    if (node.left <= i || node.right <= i || node.left >= count || node.right >= count) {
      throw DataError("tree node " + std::to_string(i) + " has invalid child links");
    }
    ++parents[static_cast<std::size_t>(node.left)];
    ++parents[static_cast<std::size_t>(node.right)];
    const double children = nodes_[static_cast<std::size_t>(node.left)].cover +
                            nodes_[static_cast<std::size_t>(node.right)].cover;
    if (std::abs(children - node.cover) > 1e-9 * std::max(1.0, node.cover)) {
      throw DataError("tree node " + std::to_string(i) + " cover is not the sum of its children");
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) throw DataError("tree node " + std::to_string(i) + " is not reachable once");
  }
}

namespace {

template <typename Row>
std::size_t route(const std::vector<TreeNode>& nodes, const Row& value_of) {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(value_of(node.feature) <= node.threshold ? node.left : node.right);
  }
  return i;
}

double predict_matrix_row(const RegressionTree& tree, const Matrix& x, Eigen::Index row) {
  const auto& nodes = tree.nodes();
  return nodes[route(nodes, [&](std::int32_t f) { return x(row, f); })].value;
}

using SortedColumns = std::vector<std::vector<std::uint32_t>>;

SortedColumns sort_columns(const Matrix& x) {
  const auto n = static_cast<std::uint32_t>(x.rows());
  SortedColumns out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& order = out[static_cast<std::size_t>(f)];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

// Greedy CART construction over a weighted set of training rows (weight =
// bootstrap multiplicity). Every feature keeps its own copy of the node's
// rows in sorted order; a node is the same contiguous range [begin, end) in
// all of them, and splitting a node stable-partitions that range in every
// copy.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestParams& params,
              const SortedColumns& sorted, std::span<const std::uint32_t> counts, Rng& rng)
      : x_(x), y_(y), weight_(counts), params_(params), rng_(rng),
        goes_left_(static_cast<std::size_t>(x.rows())) {
    const std::size_t m = static_cast<std::size_t>(x.cols());
    mtry_ = params.resolved_mtry(m);
    feature_pool_.resize(m);
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    order_.resize(m);
    for (std::size_t f = 0; f < m; ++f) {
      auto& order = order_[f];
      order.resize(static_cast<std::size_t>(x.rows()));
      std::size_t kept = 0;
      for (std::uint32_t row : sorted[f]) {
        order[kept] = row;
        kept += counts[row] > 0 ? 1 : 0;
      }
      order.resize(kept);
    }
    for (std::uint32_t c : counts) total_weight_ += c;
    scratch_.resize(order_.empty() ? 0 : order_.front().size());
    inverse_.resize(total_weight_ + 1, 0.0);
    for (std::size_t k = 1; k <= total_weight_; ++k) inverse_[k] = 1.0 / static_cast<double>(k);
  }

  RegressionTree build() {
    if (total_weight_ == 0) throw DataError("cannot fit a tree on zero samples");
    grow(0, order_.front().size(), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_rows = 0;
  };

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto& rows = order_.front();
    std::size_t count = 0;
    double sum = 0.0;
    double lo = y_[rows[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t row = rows[i];
      const double v = y_[row];
      count += weight_[row];
      sum += weight_[row] * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(count);
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, static_cast<double>(count), mean});

    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (lo == hi || depth_reached || count < 2 * params_.min_samples_leaf) return index;

    const Split best = find_split(begin, end, count, mean);
    if (best.gain <= 0.0) return index;

    partition(begin, end, best);
    const std::int32_t left = grow(begin, begin + best.left_rows, depth + 1);
    const std::int32_t right = grow(begin + best.left_rows, end, depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  Split find_split(std::size_t begin, std::size_t end, std::size_t count, double mean) {
    const std::size_t m = feature_pool_.size();
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
    }
    candidates_.assign(feature_pool_.begin(),
                       feature_pool_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    std::sort(candidates_.begin(), candidates_.end());

    const std::size_t min_leaf = params_.min_samples_leaf;
    const std::size_t max_left = count - min_leaf;
    const double n = static_cast<double>(count);
    Split best;
    for (std::size_t f : candidates_) {
      const std::uint32_t* order = order_[f].data();
      const double* column = x_.data() + static_cast<std::ptrdiff_t>(f) * x_.rows();
      double left_sum = 0.0;  // centered on the node mean
      std::size_t left_count = 0;
      double next = column[order[begin]];
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const std::uint32_t row = order[i];
        const double w = weight_[row];
        left_sum += w * (y_[row] - mean);
        left_count += weight_[row];
        const double v = next;
        next = column[order[i + 1]];
        if (left_count > max_left) break;
        if (left_count < min_leaf || !(v < next)) continue;
        // SSE decrease: n_L (mu_L - mu)^2 + n_R (mu_R - mu)^2.
        const double gain =
            left_sum * left_sum * n * inverse_[left_count] * inverse_[count - left_count];
        if (gain > best.gain) {
          double threshold = 0.5 * (v + next);
          if (!(threshold >= v && threshold < next)) threshold = v;
          best = Split{f, threshold, gain, i + 1 - begin};
        }
      }
    }
    return best;
  }

  void partition(std::size_t begin, std::size_t end, const Split& split) {
    const double* column = x_.data() + static_cast<std::ptrdiff_t>(split.feature) * x_.rows();
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t row = order_[split.feature][i];
      goes_left_[row] = column[row] <= split.threshold ? 1 : 0;
    }
    for (auto& order : order_) {
      std::size_t write = begin;
      std::size_t spill = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t row = order[i];
        const std::size_t left = goes_left_[row];
        order[write] = row;
        scratch_[spill] = row;
        write += left;
        spill += 1 - left;
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                order.begin() + static_cast<std::ptrdiff_t>(write));
    }
  }

  const Matrix& x_;
  std::span<const double> y_;
  std::span<const std::uint32_t> weight_;
  const ForestParams& params_;
  Rng& rng_;
  std::size_t mtry_ = 0;
  std::size_t total_weight_ = 0;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<double> inverse_;
  std::vector<std::size_t> feature_pool_;
  std::vector<std::size_t> candidates_;
  std::vector<TreeNode> nodes_;
};

void check_inputs(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("cannot fit on an empty design");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DataError("design has " + std::to_string(x.rows()) + " rows but target has " +
                    std::to_string(y.size()));
  }
}

// Group id per row: exact duplicates (same features and target) share the
// id of their first occurrence.
std::vector<std::size_t> duplicate_groups(const Matrix& x, std::span<const double> y) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double va = x(static_cast<Eigen::Index>(a), j);
      const double vb = x(static_cast<Eigen::Index>(b), j);
      if (va != vb) return va < vb;
    }
    if (y[a] != y[b]) return y[a] < y[b];
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool twin = i > 0 && x.row(static_cast<Eigen::Index>(order[i - 1])) ==
                                   x.row(static_cast<Eigen::Index>(order[i])) &&
                      y[order[i - 1]] == y[order[i]];
    group[order[i]] = twin ? group[order[i - 1]] : order[i];
  }
  return group;
}

}  // namespace

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const ForestParams& params,
                        std::uint64_t seed) {
  params.validate();
  check_inputs(x, y);
  const SortedColumns sorted = sort_columns(x);
  const std::vector<std::uint32_t> counts(static_cast<std::size_t>(x.rows()), 1);
  Rng rng(seed);
  return TreeBuilder(x, y, params, sorted, counts, rng).build();
}

RegressionForest fit_forest(const Matrix& x, std::span<const double> y,
                            const ForestParams& params, std::size_t threads) {
  params.validate();
  check_inputs(x, y);
  const SortedColumns sorted = sort_columns(x);
  const auto n = static_cast<std::size_t>(x.rows());

  RegressionForest forest;
  forest.params = params;
  forest.feature_count = static_cast<std::size_t>(x.cols());
  forest.trees.resize(params.n_trees);
  std::vector<std::size_t> group;
  if (params.bootstrap) {
    forest.oob_indices.resize(params.n_trees);
    // A row whose exact twin was drawn is not out of bag; this matters when
    // the input is itself a bootstrap resample.
    group = duplicate_groups(x, y);
  }

  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, Stream::kTree, t));
    std::vector<std::uint32_t> counts(n, 1);
    if (params.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0u);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) ++counts[pick(rng)];
      std::vector<char> drawn(n, 0);
      for (std::size_t r = 0; r < n; ++r) {
        if (counts[r] > 0) drawn[group[r]] = 1;
      }
      auto& oob = forest.oob_indices[t];
      for (std::size_t r = 0; r < n; ++r) {
        if (!drawn[group[r]]) oob.push_back(r);
      }
      // Twins can never be split apart, so each group trains as one weighted row.
      for (std::size_t r = 0; r < n; ++r) {
        if (group[r] != r) {
          counts[group[r]] += counts[r];
          counts[r] = 0;
        }
      }
    }
    forest.trees[t] = TreeBuilder(x, y, params, sorted, counts, rng).build();
  });
  return forest;
}

double RegressionForest::predict_row(std::span<const double> row) const {
  if (row.size() != feature_count) throw DataError("row width does not match the forest");
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(row);
  return sum / static_cast<double>(trees.size());
}

std::vector<double> RegressionForest::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_count) {
    throw DataError("design has " + std::to_string(x.cols()) + " columns, forest expects " +
                    std::to_string(feature_count));
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()), 0.0);
  for (const auto& tree : trees) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out[static_cast<std::size_t>(i)] += predict_matrix_row(tree, x, i);
    }
  }
  const double scale = 1.0 / static_cast<double>(trees.size());
  for (double& v : out) v *= scale;
  return out;
}

void RegressionForest::validate() const {
  if (trees.empty()) throw DataError("forest has no trees");
  if (feature_count == 0) throw DataError("forest has zero features");
  for (const auto& tree : trees) tree.validate(feature_count);
  if (!oob_indices.empty() && oob_indices.size() != trees.size()) {
    throw DataError("out-of-bag lists do not match the tree count");
  }
}

ImportanceVector ImportanceVector::normalized(std::vector<double> raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  ImportanceVector out{std::move(raw), Normalization::kRaw};
  if (total > 0.0) {
    for (double& v : out.values) v /= total;
    out.normalization = Normalization::kSumToOne;
  }
  return out;
}

ImportanceVector impurity_importance(const RegressionForest& forest) {
  std::vector<double> raw(forest.feature_count, 0.0);
  for (const auto& tree : forest.trees) {
    const auto& nodes = tree.nodes();
    for (const auto& node : nodes) {
      if (node.is_leaf()) continue;
      const TreeNode& l = nodes[static_cast<std::size_t>(node.left)];
      const TreeNode& r = nodes[static_cast<std::size_t>(node.right)];
      const double diff = l.value - r.value;
      raw[static_cast<std::size_t>(node.feature)] += l.cover * r.cover / node.cover * diff * diff;
    }
  }
  if (!forest.trees.empty()) {
    for (double& v : raw) v /= static_cast<double>(forest.trees.size());
  }
  return ImportanceVector::normalized(std::move(raw));
}

namespace {

void clamp_negative(std::vector<double>& raw) {
  for (double& v : raw) v = std::max(v, 0.0);
}

}  // namespace

ImportanceVector permutation_importance(const RegressionForest& forest, const Matrix& x,
                                        std::span<const double> y, std::size_t n_repeats,
                                        std::uint64_t seed, std::size_t threads) {
  if (static_cast<std::size_t>(x.cols()) != forest.feature_count ||
      static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DataError("permutation importance: data dimensions do not match the forest");
  }
  if (n_repeats == 0) throw ConfigError("n_repeats must be >= 1");
  const std::size_t n = y.size();
  const std::size_t trees = forest.trees.size();

  // Per-tree predictions; permuting column j only changes trees that split on j.
  std::vector<std::vector<double>> per_tree(trees, std::vector<double>(n));
  parallel_for(trees, threads, [&](std::size_t t) {
    for (std::size_t i = 0; i < n; ++i) {
      per_tree[t][i] = predict_matrix_row(forest.trees[t], x, static_cast<Eigen::Index>(i));
    }
  });
  auto mse_of = [&](const std::vector<double>& sums) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sums[i] / static_cast<double>(trees) - y[i];
      acc += d * d;
    }
    return acc / static_cast<double>(n);
  };
  std::vector<double> base_sum(n, 0.0);
  for (std::size_t t = 0; t < trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) base_sum[i] += per_tree[t][i];
  }
  const double base_mse = mse_of(base_sum);

  std::vector<double> raw(forest.feature_count, 0.0);
  parallel_for(forest.feature_count, threads, [&](std::size_t j) {
    std::vector<std::size_t> users;
    for (std::size_t t = 0; t < trees; ++t) {
      if (forest.trees[t].uses_feature(j)) users.push_back(t);
    }
    if (users.empty()) return;
    std::vector<std::size_t> perm(n);
    std::vector<double> sums(n);
    double total = 0.0;
    for (std::size_t rep = 0; rep < n_repeats; ++rep) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng(derive_seed(seed, Stream::kPermutation, j, rep));
      std::shuffle(perm.begin(), perm.end(), rng);
      std::fill(sums.begin(), sums.end(), 0.0);
      std::size_t next_user = 0;
      for (std::size_t t = 0; t < trees; ++t) {
        const bool changed = next_user < users.size() && users[next_user] == t;
        if (!changed) {
          for (std::size_t i = 0; i < n; ++i) sums[i] += per_tree[t][i];
          continue;
        }
        ++next_user;
        const auto& nodes = forest.trees[t].nodes();
        for (std::size_t i = 0; i < n; ++i) {
          const auto row = static_cast<Eigen::Index>(i);
          const auto donor = static_cast<Eigen::Index>(perm[i]);
          const std::size_t leaf = route(nodes, [&](std::int32_t f) {
            return static_cast<std::size_t>(f) == j ? x(donor, f) : x(row, f);
          });
          sums[i] += nodes[leaf].value;
        }
      }
      total += mse_of(sums) - base_mse;
    }
    raw[j] = total / static_cast<double>(n_repeats);
  });
  clamp_negative(raw);
  return ImportanceVector::normalized(std::move(raw));
}

ImportanceVector oob_permutation_importance(const RegressionForest& forest, const Matrix& x,
                                            std::span<const double> y, std::size_t n_repeats,
                                            std::uint64_t seed, std::size_t threads) {
  if (static_cast<std::size_t>(x.cols()) != forest.feature_count ||
      static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DataError("permutation importance: data dimensions do not match the forest");
  }
  if (forest.oob_indices.size() != forest.trees.size()) {
    throw DataError("out-of-bag importance needs a forest fitted with bootstrap");
  }
  if (n_repeats == 0) throw ConfigError("n_repeats must be >= 1");
  const std::size_t trees = forest.trees.size();
  const std::size_t m = forest.feature_count;

  // Per tree: MSE increase on its out-of-bag rows, one slot per feature. A
  // permuted row follows its original path down to the first node that splits
  // on the permuted feature, so routing restarts there; rows whose path never
  // touches the feature keep their leaf and contribute nothing.
  std::vector<std::vector<double>> per_tree(trees, std::vector<double>(m, 0.0));
  parallel_for(trees, threads, [&](std::size_t t) {
    const auto& oob = forest.oob_indices[t];
    if (oob.empty()) return;
    const auto& nodes = forest.trees[t].nodes();
    const std::size_t count = oob.size();
    std::vector<double> base_error(count);
    std::vector<std::int32_t> first_use(count * m, -1);
    for (std::size_t k = 0; k < count; ++k) {
      const auto row = static_cast<Eigen::Index>(oob[k]);
      std::size_t i = 0;
      while (!nodes[i].is_leaf()) {
        const auto f = static_cast<std::size_t>(nodes[i].feature);
        if (first_use[k * m + f] < 0) first_use[k * m + f] = static_cast<std::int32_t>(i);
        i = static_cast<std::size_t>(x(row, nodes[i].feature) <= nodes[i].threshold
                                         ? nodes[i].left
                                         : nodes[i].right);
      }
      const double d = nodes[i].value - y[oob[k]];
      base_error[k] = d * d;
    }
    std::vector<std::size_t> perm(count);
    for (std::size_t j = 0; j < m; ++j) {
      if (!forest.trees[t].uses_feature(j)) continue;
      const auto col = static_cast<Eigen::Index>(j);
      double increase = 0.0;
      for (std::size_t rep = 0; rep < n_repeats; ++rep) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(derive_seed(seed, Stream::kPermutation, t * m + j, rep));
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t k = 0; k < count; ++k) {
          const std::int32_t start = first_use[k * m + j];
          if (start < 0) continue;
          const auto row = static_cast<Eigen::Index>(oob[k]);
          const double swapped = x(static_cast<Eigen::Index>(oob[perm[k]]), col);
          auto i = static_cast<std::size_t>(start);
          while (!nodes[i].is_leaf()) {
            const TreeNode& node = nodes[i];
            const double v = node.feature == static_cast<std::int32_t>(j)
                                 ? swapped
                                 : x(row, node.feature);
            i = static_cast<std::size_t>(v <= node.threshold ? node.left : node.right);
          }
          const double d = nodes[i].value - y[oob[k]];
          increase += d * d - base_error[k];
        }
      }
      per_tree[t][j] = increase / (static_cast<double>(n_repeats) * static_cast<double>(count));
    }
  });
  std::vector<double> raw(m, 0.0);
  for (std::size_t t = 0; t < trees; ++t) {
    for (std::size_t j = 0; j < m; ++j) raw[j] += per_tree[t][j];
  }
  for (double& v : raw) v /= static_cast<double>(trees);
  clamp_negative(raw);
  return ImportanceVector::normalized(std::move(raw));
}

}  // namespace tangled
