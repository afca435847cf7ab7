#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tangled/metrics.hpp"
#include "tangled/select.hpp"

namespace tangled {

/// Chance-corrected overlap of two equal-size subsets of a universe of m
/// features: (|A ∩ B| - k^2/m) / (k - k^2/m). Throws DomainError unless
/// |A| = |B| = k and 0 < k < m.
double kuncheva_pair(std::span<const std::size_t> a, std::span<const std::size_t> b,
                     std::size_t k, std::size_t m);

/// The same index as an exact fraction: numerator m|A ∩ B| - k^2 over
/// denominator mk - k^2.
struct KunchevaFraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
};
KunchevaFraction kuncheva_fraction(std::span<const std::size_t> a, std::span<const std::size_t> b,
                                   std::size_t k, std::size_t m);

/// Average-tie ranks, 1-based.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson correlation of fractional ranks. Throws DomainError on length
/// mismatch, fewer than two values or a constant input.
double spearman(std::span<const double> x, std::span<const double> y);

/// Feature indices by descending score; ties go to the lower index.
IndexList ranking_from_importance(std::span<const double> importance);

/// One feature ranking per run. `eligible` is how far down the ranking the
/// run's own evidence reaches (its selected-set size); top-k sets deeper than
/// that are truncated.
struct RunRanking {
  IndexList order;
  std::size_t eligible = 0;
};

struct KunchevaPair {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t k_used = 0;
  double value = 0.0;
  bool truncated = false;
};

struct KunchevaPoint {
  std::size_t k = 0;
  double mean = 0.0;
  /// Standard error of the pairwise values (0 with a single pair).
  double stderr_mean = 0.0;
  std::vector<KunchevaPair> pairs;
};

/// For each k, the mean pairwise Kuncheva index of the runs' top-k sets over
/// all unordered run pairs. A pair whose runs reach fewer than k eligible
/// features uses the smaller depth (at least 1) and is flagged.
std::vector<KunchevaPoint> kuncheva_curve(std::span<const RunRanking> runs,
                                          std::span<const std::size_t> k_grid, std::size_t m);

struct SpearmanPair {
  std::size_t a = 0;
  std::size_t b = 0;
  /// Empty when the correlation is undefined (fewer than two features in the
  /// union, or one side constant while the other is not).
  std::optional<double> rho;
};

struct SpearmanSummary {
  std::vector<SpearmanPair> pairs;
  /// Mean over the defined pairs; empty when none is defined.
  std::optional<double> mean;
};

/// Pairwise rank correlation of run importances. With `selected` given, each
/// pair is compared over the union of both runs' selected features, and a
/// feature a run did not select ties below everything it did. Without it the
/// full importance vectors are compared.
SpearmanSummary pairwise_spearman(std::span<const std::vector<double>> importance,
                                  std::span<const IndexList> selected);

struct StabilityConfig {
  std::size_t n_repeats = 10;
  double train_fraction = 0.8;
  /// Empty means 1 .. min(15, m - 1).
  std::vector<std::size_t> k_grid;
  SelectionConfig selection;
  /// Master seed; the split and every repeat derive from it.
  std::uint64_t seed = 0;
  /// Explicit per-repeat seeds; empty derives them from `seed`.
  std::vector<std::uint64_t> repeat_seeds;

  std::vector<std::size_t> resolved_k_grid(std::size_t m) const;
  std::uint64_t repeat_seed(std::size_t r) const;
  void validate(std::size_t m) const;
};

/// Importances and scores of one downstream model in one repeat.
struct ModelRun {
  Predictor predictor = Predictor::kForest;
  /// Mean |SHAP| on the test fold, one entry per feature of the full matrix
  /// (0 for features outside the selection), normalized to unit sum.
  std::vector<double> importance;
  IndexList ranking;
  AngleAccuracy accuracy;
};

struct RepeatRecord {
  std::uint64_t seed = 0;
  /// Selected features in refined order.
  IndexList selected;
  std::vector<ModelRun> models;
  /// Impurity importance of a forest fitted on all features (naive baseline).
  std::vector<double> baseline_importance;
  IndexList baseline_ranking;
};

struct ModelStability {
  Predictor predictor = Predictor::kForest;
  std::vector<KunchevaPoint> kuncheva;
  SpearmanSummary spearman;
};

struct AngleStability {
  Angle angle = Angle::kPhi;
  std::vector<RepeatRecord> runs;
  /// One entry per downstream model: forest first, then OLS.
  std::vector<ModelStability> models;
  ModelStability baseline;

  const ModelStability& model(Predictor predictor) const;
};

struct StabilityReport {
  StabilityConfig config;
  std::size_t feature_count = 0;
  std::vector<std::size_t> k_grid;
  DatasetSplit split;
  std::vector<AngleStability> angles;
};

/// One repeat for one angle: bootstrap the training fold, run the whole
/// selection pipeline on the resample, fit forest and OLS on the selected
/// columns and attribute them on the test fold.
RepeatRecord run_repeat(const FeatureMatrix& features, const AngleTargets& angles, Angle angle,
                        const DatasetSplit& split, const StabilityConfig& cfg,
                        std::uint64_t repeat_seed);

/// Splits once, runs every repeat for every requested angle and aggregates
/// Kuncheva curves and Spearman correlations per model and for the baseline.
StabilityReport run_stability(const FeatureMatrix& features, const AngleTargets& angles,
                              const StabilityConfig& cfg);

}  // namespace tangled
