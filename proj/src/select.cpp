#include "tangled/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tangled/error.hpp"
#include "tangled/parallel.hpp"
#include "tangled/random.hpp"

namespace tangled {

const char* to_string(ImportanceBackend backend) {
  return backend == ImportanceBackend::kImpurity ? "impurity" : "permutation";
}

void SelectionConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (runs == 0) throw ConfigError("runs (R) must be >= 1");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ConfigError("coverage must lie in (0, 1]");
  if (permutation_repeats == 0) throw ConfigError("permutation repeats must be >= 1");
  forest.validate();
}

IndexList RepresentativeSet::features() const {
  IndexList out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.feature);
  std::sort(out.begin(), out.end());
  return out;
}

IndexList SelectionResult::indices() const {
  IndexList out;
  out.reserve(selected.size());
  for (const auto& s : selected) out.push_back(s.feature);
  return out;
}

std::vector<double> averaged_importance(const Matrix& x, const EncodedTargets& targets,
                                        const SelectionConfig& cfg, std::uint64_t seed,
                                        std::size_t threads) {
  const auto width = static_cast<std::size_t>(x.cols());
  std::vector<double> avg(width, 0.0);
  const auto components = static_cast<std::size_t>(targets.values.cols());
  for (std::size_t c = 0; c < components; ++c) {
    const Vector y = targets.values.col(static_cast<Eigen::Index>(c));
    const std::span<const double> target(y.data(), static_cast<std::size_t>(y.size()));
    ForestParams params = cfg.forest;
    params.seed = derive_seed(seed, Stream::kTree, c);
    const RegressionForest forest = fit_forest(x, target, params, threads);
    ImportanceVector imp;
    if (cfg.importance == ImportanceBackend::kImpurity) {
      imp = impurity_importance(forest);
    } else {
      const std::uint64_t perm_seed = derive_seed(seed, Stream::kPermutation, c);
      imp = params.bootstrap
                ? oob_permutation_importance(forest, x, target, cfg.permutation_repeats,
                                             perm_seed, threads)
                : permutation_importance(forest, x, target, cfg.permutation_repeats, perm_seed,
                                         threads);
    }
    for (std::size_t j = 0; j < width; ++j) avg[j] += imp.values[j];
  }
  for (double& v : avg) v /= static_cast<double>(components);
  return avg;
}

RepresentativeSet ensemble_representatives(const FeatureMatrix& features,
                                           const ClusterPartition& partition,
                                           const EncodedTargets& targets,
                                           const SelectionConfig& cfg) {
  cfg.validate();
  const std::size_t m = features.cols();
  if (partition.assignment.size() != m) {
    throw DataError("partition covers " + std::to_string(partition.assignment.size()) +
                    " features, matrix has " + std::to_string(m));
  }
  if (static_cast<std::size_t>(targets.values.rows()) != features.rows()) {
    throw DataError("target rows do not match feature rows");
  }

  IndexList singletons;
  std::vector<std::size_t> multi;  // component ids with >= 2 members
  for (std::size_t c = 0; c < partition.size(); ++c) {
    if (partition.components[c].size() == 1) {
      singletons.push_back(partition.components[c].front());
    } else {
      multi.push_back(c);
    }
  }

  // Runs are independent: each owns its candidate draw and forest streams.
  struct RunOutcome {
    IndexList design;
    std::vector<double> importance;
  };
  std::vector<RunOutcome> outcomes(cfg.runs);
  const std::size_t outer = std::min(cfg.threads, cfg.runs);
  const std::size_t inner = outer > 1 ? 1 : cfg.threads;
  parallel_for(cfg.runs, outer, [&](std::size_t r) {
    Rng rng(derive_seed(cfg.seed, Stream::kEnsemble, r));
    IndexList design = singletons;
    for (std::size_t c : multi) {
      const auto& members = partition.components[c];
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      design.push_back(members[pick(rng)]);
    }
    std::sort(design.begin(), design.end());
    const Matrix x = features.select_columns(design).values;
    outcomes[r].importance =
        averaged_importance(x, targets, cfg, derive_seed(cfg.seed, Stream::kEnsemble, r, 1), inner);
    outcomes[r].design = std::move(design);
  });

  std::vector<double> sum(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (const auto& run : outcomes) {
    for (std::size_t k = 0; k < run.design.size(); ++k) {
      sum[run.design[k]] += run.importance[k];
      ++count[run.design[k]];
    }
  }

  RepresentativeSet reps;
  for (std::size_t c = 0; c < partition.size(); ++c) {
    ClusterRepresentative rep;
    rep.cluster_id = c;
    rep.candidates = partition.components[c];
    double best = -1.0;
    for (std::size_t j : rep.candidates) {
      const double mean = count[j] ? sum[j] / static_cast<double>(count[j]) : 0.0;
      rep.runs_evaluated.push_back(count[j]);
      rep.candidate_importance.push_back(mean);
      // Members are ascending, so strict > keeps the lowest index on ties.
      if (count[j] > 0 && mean > best) {
        best = mean;
        rep.feature = j;
      }
    }
    if (best < 0.0) {
      throw DataError("cluster " + std::to_string(c) + " was never evaluated");
    }
    rep.mean_importance = best;
    reps.clusters.push_back(std::move(rep));
  }
  return reps;
}

std::size_t cumulative_cut(std::span<const double> descending, double coverage) {
  if (descending.empty()) return 0;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < descending.size(); ++i) {
    cumulative += descending[i];
    if (cumulative >= coverage - 1e-12) return i + 1;
  }
  return descending.size();
}

SelectionResult refine_cumulative(const FeatureMatrix& features, const RepresentativeSet& reps,
                                  const EncodedTargets& targets, const SelectionConfig& cfg) {
  cfg.validate();
  if (reps.clusters.empty()) throw DataError("refinement needs at least one representative");
  const IndexList design = reps.features();
  const Matrix x = features.select_columns(design).values;
  const std::vector<double> importance =
      averaged_importance(x, targets, cfg, derive_seed(cfg.seed, Stream::kRefine), cfg.threads);

  std::vector<std::size_t> order(design.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });

  SelectionResult result;
  result.representatives = reps;
  result.config = cfg;
  std::vector<double> descending;
  for (std::size_t k : order) {
    result.refined_order.emplace_back(design[k], importance[k]);
    descending.push_back(importance[k]);
  }
  const std::size_t keep = cumulative_cut(descending, cfg.coverage);

  auto cluster_of = [&](std::size_t feature) -> const ClusterRepresentative& {
    for (const auto& c : reps.clusters) {
      if (c.feature == feature) return c;
    }
    throw DataError("representative lookup failed");
  };
  double cumulative = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t feature = design[order[i]];
    cumulative += importance[order[i]];
    const auto& cluster = cluster_of(feature);
    result.selected.push_back(SelectedFeature{feature, cluster.cluster_id,
                                              cluster.mean_importance, importance[order[i]],
                                              cumulative});
  }
  return result;
}

SelectionResult run_pipeline(const FeatureMatrix& features, const AngleTargets& angles,
                             Angle angle, const SelectionConfig& cfg) {
  cfg.validate();
  features.validate();
  if (angles.size() != features.rows()) throw DataError("angle rows do not match feature rows");
  const EncodedTargets targets = encode_angles(angles).components(angle);

  IndexList constant;
  const ClusterPartition partition = cluster_features(features, cfg.tau, &constant);

  SelectionConfig angle_cfg = cfg;
  angle_cfg.seed = derive_seed(cfg.seed, Stream::kAngle, static_cast<std::uint64_t>(angle));
  const RepresentativeSet reps = ensemble_representatives(features, partition, targets, angle_cfg);
  SelectionResult result = refine_cumulative(features, reps, targets, angle_cfg);
  result.angle = angle;
  result.partition = partition;
  result.constant_features = std::move(constant);
  result.config = cfg;
  return result;
}

std::vector<SelectionResult> run_pipeline(const FeatureMatrix& features,
                                          const AngleTargets& angles,
                                          const SelectionConfig& cfg) {
  std::vector<SelectionResult> out;
  for (Angle angle : expand(cfg.target_angle)) {
    out.push_back(run_pipeline(features, angles, angle, cfg));
  }
  return out;
}

}  // namespace tangled
