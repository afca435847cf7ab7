#include "tangled/corrgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tangled/error.hpp"

namespace tangled {

CorrelationMatrix pearson_matrix(const FeatureMatrix& features) {
  const Eigen::Index n = features.values.rows();
  const Eigen::Index m = features.values.cols();
  if (n < 2) throw DataError("correlation needs at least 2 observations");

  CorrelationMatrix out;
  out.names = features.names;
  Matrix centered = features.values.rowwise() - features.values.colwise().mean();
  Vector inv_norm(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = features.values.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      out.constant.push_back(static_cast<std::size_t>(j));
      centered.col(j).setZero();
      inv_norm(j) = 0.0;
    } else {
      inv_norm(j) = 1.0 / centered.col(j).norm();
    }
  }
  // The 1/n factors of the population covariance and deviations cancel.
  centered = centered * inv_norm.asDiagonal();
  Matrix corr = centered.transpose() * centered;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = std::clamp(corr(i, j), -1.0, 1.0);
      corr(i, j) = v;
      corr(j, i) = v;
    }
    corr(i, i) = inv_norm(i) > 0.0 ? 1.0 : 0.0;
  }
  out.values = std::move(corr);
  return out;
}

ThresholdGraph build_graph(const CorrelationMatrix& correlations, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError("tau must lie in (0, 1], got " + std::to_string(tau));
  }
  ThresholdGraph graph;
  graph.vertex_count = correlations.size();
  graph.tau = tau;
  const auto m = static_cast<Eigen::Index>(graph.vertex_count);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (std::abs(correlations.values(i, j)) >= tau) {
        graph.edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return graph;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root wins, so each root is its component's smallest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

ClusterPartition connected_components(const ThresholdGraph& graph) {
  const std::size_t m = graph.vertex_count;
  DisjointSets sets(m);
  for (const auto& [a, b] : graph.edges) {
    if (a >= m || b >= m) throw DataError("edge references a vertex outside the graph");
    sets.unite(a, b);
  }
  ClusterPartition out;
  out.assignment.assign(m, 0);
  std::vector<std::size_t> id_of_root(m, m);
  for (std::size_t v = 0; v < m; ++v) {
    const std::size_t root = sets.find(v);
    if (id_of_root[root] == m) {
      id_of_root[root] = out.components.size();
      out.components.emplace_back();
    }
    out.assignment[v] = id_of_root[root];
    out.components[id_of_root[root]].push_back(v);
  }
  return out;
}

ClusterPartition cluster_features(const FeatureMatrix& features, double tau,
                                  IndexList* constant) {
  const CorrelationMatrix corr = pearson_matrix(features);
  if (constant) *constant = corr.constant;
  return connected_components(build_graph(corr, tau));
}

}  // namespace tangled
