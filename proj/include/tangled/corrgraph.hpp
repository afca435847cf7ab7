#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tangled/ingest.hpp"

namespace tangled {

/// Pearson correlations between feature columns. Constant columns have no
/// defined correlation; their row and column (diagonal included) are zero
/// and their indices are listed in `constant`.
struct CorrelationMatrix {
  Matrix values;
  std::vector<std::string> names;
  IndexList constant;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
};

struct ThresholdGraph {
  std::size_t vertex_count = 0;
  /// Unordered pairs stored as (i, j) with i < j, sorted lexicographically.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double tau = 0.0;
};

struct ClusterPartition {
  /// Component id of every feature.
  std::vector<std::size_t> assignment;
  /// Members of each component, ascending; components ordered by their
  /// smallest member.
  std::vector<IndexList> components;

  std::size_t size() const { return components.size(); }
};

CorrelationMatrix pearson_matrix(const FeatureMatrix& features);

/// Edges for every pair with |S_ij| >= tau. Throws ConfigError unless
/// 0 < tau <= 1.
ThresholdGraph build_graph(const CorrelationMatrix& correlations, double tau);

ClusterPartition connected_components(const ThresholdGraph& graph);

/// Convenience: correlation, threshold graph and components in one call.
ClusterPartition cluster_features(const FeatureMatrix& features, double tau,
                                  IndexList* constant = nullptr);

}  // namespace tangled
