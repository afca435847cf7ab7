#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tangled/corrgraph.hpp"
#include "tangled/forest.hpp"
#include "tangled/ingest.hpp"

namespace tangled {

enum class ImportanceBackend { kImpurity, kPermutation };

const char* to_string(ImportanceBackend backend);

struct SelectionConfig {
  double tau = 0.8;
  /// Ensemble runs R.
  std::size_t runs = 50;
  ForestParams forest;
  double coverage = 0.99;
  ImportanceBackend importance = ImportanceBackend::kImpurity;
  /// Shuffles per feature for the permutation backend.
  std::size_t permutation_repeats = 3;
  std::uint64_t seed = 0;
  AngleSelection target_angle = AngleSelection::kBoth;
  std::size_t threads = 1;

  void validate() const;
};

struct ClusterRepresentative {
  std::size_t cluster_id = 0;
  std::size_t feature = 0;
  /// Participation-conditional mean importance of the chosen member.
  double mean_importance = 0.0;
  /// Every member with its run count and mean importance (0 if never drawn).
  IndexList candidates;
  std::vector<std::size_t> runs_evaluated;
  std::vector<double> candidate_importance;
};

struct RepresentativeSet {
  /// One entry per component, in component order.
  std::vector<ClusterRepresentative> clusters;

  /// Representative feature indices, ascending.
  IndexList features() const;
};

struct SelectedFeature {
  std::size_t feature = 0;
  std::size_t cluster_id = 0;
  double ensemble_importance = 0.0;
  double refined_importance = 0.0;
  double cumulative_at_inclusion = 0.0;
};

struct SelectionResult {
  Angle angle = Angle::kPhi;
  /// Final subset in descending refined importance.
  std::vector<SelectedFeature> selected;
  /// Every representative in refined order with its importance; `selected`
  /// is a prefix of this list.
  std::vector<std::pair<std::size_t, double>> refined_order;
  RepresentativeSet representatives;
  ClusterPartition partition;
  IndexList constant_features;
  SelectionConfig config;

  IndexList indices() const;
};

/// Fits one forest per target column on `x` and averages the normalized
/// importances across columns.
std::vector<double> averaged_importance(const Matrix& x, const EncodedTargets& targets,
                                        const SelectionConfig& cfg, std::uint64_t seed,
                                        std::size_t threads);

/// Ensemble stage: R runs, each drawing one member per multi-member cluster
/// next to every singleton feature.
RepresentativeSet ensemble_representatives(const FeatureMatrix& features,
                                           const ClusterPartition& partition,
                                           const EncodedTargets& targets,
                                           const SelectionConfig& cfg);

/// Number of leading entries of a descending importance list needed for the
/// cumulative sum to reach `coverage` (the crossing entry included). Returns
/// the full length when the total never reaches it, and at least 1.
std::size_t cumulative_cut(std::span<const double> descending, double coverage);

/// Refinement stage: refit on the representatives and keep the smallest
/// importance-ordered prefix that reaches the coverage threshold.
SelectionResult refine_cumulative(const FeatureMatrix& features, const RepresentativeSet& reps,
                                  const EncodedTargets& targets, const SelectionConfig& cfg);

/// Correlation clustering, ensemble selection and refinement for a single
/// angle using that angle's (cos, sin) targets.
SelectionResult run_pipeline(const FeatureMatrix& features, const AngleTargets& angles,
                             Angle angle, const SelectionConfig& cfg);

/// One result per angle in cfg.target_angle.
std::vector<SelectionResult> run_pipeline(const FeatureMatrix& features,
                                          const AngleTargets& angles,
                                          const SelectionConfig& cfg);

}  // namespace tangled
