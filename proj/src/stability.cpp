#include "tangled/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tangled/error.hpp"
#include "tangled/parallel.hpp"
#include "tangled/random.hpp"
#include "tangled/shap.hpp"

namespace tangled {
namespace {

IndexList checked_set(std::span<const std::size_t> values, std::size_t k, std::size_t m) {
  if (values.size() != k) {
    throw DomainError("subset has " + std::to_string(values.size()) + " features, expected k = " +
                      std::to_string(k));
  }
  IndexList sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("subset contains a repeated feature");
  }
  if (!sorted.empty() && sorted.back() >= m) throw DomainError("feature index outside universe");
  return sorted;
}

std::size_t overlap(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t k,
                    std::size_t m) {
  if (k == 0 || k >= m) {
    throw DomainError("Kuncheva index needs 0 < k < m (k = " + std::to_string(k) +
                      ", m = " + std::to_string(m) + ")");
  }
  const IndexList sa = checked_set(a, k, m);
  const IndexList sb = checked_set(b, k, m);
  IndexList common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return common.size();
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("rank correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Selected features by descending importance (ties to the lower index), then
// every unselected feature by index.
IndexList selection_ranking(std::span<const double> importance, const IndexList& selected) {
  IndexList head = selected;
  std::sort(head.begin(), head.end(), [&](std::size_t a, std::size_t b) {
    if (importance[a] != importance[b]) return importance[a] > importance[b];
    return a < b;
  });
  std::vector<char> taken(importance.size(), 0);
  for (std::size_t j : head) taken[j] = 1;
  for (std::size_t j = 0; j < importance.size(); ++j) {
    if (!taken[j]) head.push_back(j);
  }
  return head;
}

std::vector<double> column(const Matrix& m, Eigen::Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

// Mean |SHAP| per selected column averaged over the two components, then
// spread over the full feature index space.
void accumulate_shap(const ShapMatrix& shap, const IndexList& design, std::vector<double>& out) {
  const ImportanceVector imp = mean_abs_shap(shap);
  for (std::size_t k = 0; k < design.size(); ++k) out[design[k]] += 0.5 * imp.values[k];
}

}  // namespace

double kuncheva_pair(std::span<const std::size_t> a, std::span<const std::size_t> b,
                     std::size_t k, std::size_t m) {
  const double r = static_cast<double>(overlap(a, b, k, m));
  const double kk = static_cast<double>(k);
  const double expected = kk * kk / static_cast<double>(m);
  return (r - expected) / (kk - expected);
}

KunchevaFraction kuncheva_fraction(std::span<const std::size_t> a, std::span<const std::size_t> b,
                                   std::size_t k, std::size_t m) {
  const auto r = static_cast<std::int64_t>(overlap(a, b, k, m));
  const auto kk = static_cast<std::int64_t>(k);
  const auto mm = static_cast<std::int64_t>(m);
  return KunchevaFraction{mm * r - kk * kk, mm * kk - kk * kk};
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman: length mismatch");
  if (x.size() < 2) throw DomainError("spearman needs at least two values");
  const std::vector<double> rx = fractional_ranks(x);
  const std::vector<double> ry = fractional_ranks(y);
  return pearson(rx, ry);
}

IndexList ranking_from_importance(std::span<const double> importance) {
  IndexList order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });
  return order;
}

std::vector<KunchevaPoint> kuncheva_curve(std::span<const RunRanking> runs,
                                          std::span<const std::size_t> k_grid, std::size_t m) {
  if (runs.size() < 2) throw DomainError("a Kuncheva curve needs at least two runs");
  for (const auto& run : runs) {
    if (run.order.size() != m) throw DomainError("ranking length does not match m");
  }
  std::vector<KunchevaPoint> curve;
  for (std::size_t k : k_grid) {
    if (k == 0 || k >= m) throw DomainError("k must satisfy 1 <= k < m");
    KunchevaPoint point;
    point.k = k;
    for (std::size_t a = 0; a < runs.size(); ++a) {
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        const std::size_t depth =
            std::max<std::size_t>(1, std::min({k, runs[a].eligible, runs[b].eligible}));
        const std::span<const std::size_t> top_a(runs[a].order.data(), depth);
        const std::span<const std::size_t> top_b(runs[b].order.data(), depth);
        point.pairs.push_back(
            KunchevaPair{a, b, depth, kuncheva_pair(top_a, top_b, depth, m), depth < k});
      }
    }
    double sum = 0.0;
    for (const auto& p : point.pairs) sum += p.value;
    const auto count = static_cast<double>(point.pairs.size());
    point.mean = sum / count;
    if (point.pairs.size() > 1) {
      double ss = 0.0;
      for (const auto& p : point.pairs) ss += (p.value - point.mean) * (p.value - point.mean);
      point.stderr_mean = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
    curve.push_back(std::move(point));
  }
  return curve;
}

SpearmanSummary pairwise_spearman(std::span<const std::vector<double>> importance,
                                  std::span<const IndexList> selected) {
  if (!selected.empty() && selected.size() != importance.size()) {
    throw DomainError("one selected set per run is required");
  }
  SpearmanSummary out;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t a = 0; a < importance.size(); ++a) {
    for (std::size_t b = a + 1; b < importance.size(); ++b) {
      std::vector<double> xa;
      std::vector<double> xb;
      if (selected.empty()) {
        xa = importance[a];
        xb = importance[b];
      } else {
        IndexList sa = selected[a];
        IndexList sb = selected[b];
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        IndexList domain;
        std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(domain));
        // Importances are non-negative, so -1 ranks an unselected feature
        // below every selected one.
        for (std::size_t j : domain) {
          xa.push_back(std::binary_search(sa.begin(), sa.end(), j) ? importance[a][j] : -1.0);
          xb.push_back(std::binary_search(sb.begin(), sb.end(), j) ? importance[b][j] : -1.0);
        }
      }
      SpearmanPair pair{a, b, std::nullopt};
      if (xa.size() >= 2) {
        if (xa == xb) {
          pair.rho = 1.0;
        } else if (!is_constant(xa) && !is_constant(xb)) {
          pair.rho = spearman(xa, xb);
        }
      }
      if (pair.rho) {
        sum += *pair.rho;
        ++defined;
      }
      out.pairs.push_back(pair);
    }
  }
  if (defined > 0) out.mean = sum / static_cast<double>(defined);
  return out;
}

std::vector<std::size_t> StabilityConfig::resolved_k_grid(std::size_t m) const {
  if (!k_grid.empty()) return k_grid;
  std::vector<std::size_t> grid;
  const std::size_t top = m > 1 ? std::min<std::size_t>(15, m - 1) : 0;
  for (std::size_t k = 1; k <= top; ++k) grid.push_back(k);
  return grid;
}

std::uint64_t StabilityConfig::repeat_seed(std::size_t r) const {
  return repeat_seeds.empty() ? derive_seed(seed, Stream::kRepeat, r) : repeat_seeds.at(r);
}

void StabilityConfig::validate(std::size_t m) const {
  if (n_repeats < 2) throw ConfigError("repeats must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (!repeat_seeds.empty() && repeat_seeds.size() != n_repeats) {
    throw ConfigError("repeat_seeds must list one seed per repeat");
  }
  const auto grid = resolved_k_grid(m);
  if (grid.empty()) throw ConfigError("k grid is empty (need at least two features)");
  for (std::size_t k : grid) {
    if (k == 0 || k >= m) {
      throw ConfigError("k = " + std::to_string(k) + " outside [1, " + std::to_string(m) + ")");
    }
  }
  selection.validate();
}

const ModelStability& AngleStability::model(Predictor predictor) const {
  for (const auto& m : models) {
    if (m.predictor == predictor) return m;
  }
  throw DomainError(std::string("no stability entry for predictor ") + to_string(predictor));
}

RepeatRecord run_repeat(const FeatureMatrix& features, const AngleTargets& angles, Angle angle,
                        const DatasetSplit& split, const StabilityConfig& cfg,
                        std::uint64_t repeat_seed) {
  const std::size_t m = features.cols();
  const IndexList resample =
      bootstrap_resample(split.train, derive_seed(repeat_seed, Stream::kBootstrap));
  const FeatureMatrix train_x = features.select_rows(resample);
  const AngleTargets train_angles = angles.select_rows(resample);

  SelectionConfig sel = cfg.selection;
  sel.seed = repeat_seed;
  const SelectionResult selection = run_pipeline(train_x, train_angles, angle, sel);

  RepeatRecord record;
  record.seed = repeat_seed;
  record.selected = selection.indices();

  IndexList design = record.selected;
  std::sort(design.begin(), design.end());
  const Matrix x_fit = train_x.select_columns(design).values;
  const Matrix x_test = features.select_rows(split.test).select_columns(design).values;
  const Matrix y_fit = encode_angles(train_angles).components(angle).values;
  const auto& theta = angles.get(angle);
  std::vector<double> theta_test;
  for (std::size_t r : split.test) theta_test.push_back(theta[r]);

  const std::size_t threads = sel.threads;
  for (Predictor predictor : {Predictor::kForest, Predictor::kOls}) {
    ModelRun run;
    run.predictor = predictor;
    run.importance.assign(m, 0.0);
    std::vector<double> predictions[2];
    for (int c = 0; c < 2; ++c) {
      const std::vector<double> y = column(y_fit, c);
      if (predictor == Predictor::kForest) {
        ForestParams params = sel.forest;
        params.seed = derive_seed(repeat_seed, Stream::kDownstream,
                                  static_cast<std::uint64_t>(angle), static_cast<std::uint64_t>(c));
        const RegressionForest forest = fit_forest(x_fit, y, params, threads);
        predictions[c] = forest.predict(x_test);
        accumulate_shap(tree_shap(forest, x_test, threads), design, run.importance);
      } else {
        const OlsModel model = fit_ols(x_fit, y);
        predictions[c] = model.predict(x_test);
        accumulate_shap(
            linear_shap(model.coefficients, model.feature_means, model.intercept, x_test), design,
            run.importance);
      }
    }
    run.ranking = selection_ranking(run.importance, record.selected);
    run.accuracy = score_angle(theta_test, predictions[0], predictions[1]);
    record.models.push_back(std::move(run));
  }

  // Naive comparator: forest impurity over every feature, no clustering.
  record.baseline_importance.assign(m, 0.0);
  const Matrix x_all = train_x.values;
  for (int c = 0; c < 2; ++c) {
    ForestParams params = sel.forest;
    params.seed = derive_seed(repeat_seed, Stream::kBaseline, static_cast<std::uint64_t>(angle),
                              static_cast<std::uint64_t>(c));
    const ImportanceVector imp =
        impurity_importance(fit_forest(x_all, column(y_fit, c), params, threads));
    for (std::size_t j = 0; j < m; ++j) record.baseline_importance[j] += 0.5 * imp.values[j];
  }
  record.baseline_ranking = ranking_from_importance(record.baseline_importance);
  return record;
}

StabilityReport run_stability(const FeatureMatrix& features, const AngleTargets& angles,
                              const StabilityConfig& cfg) {
  features.validate();
  angles.validate();
  if (angles.size() != features.rows()) throw DataError("angle rows do not match feature rows");
  const std::size_t m = features.cols();
  cfg.validate(m);

  StabilityReport report;
  report.config = cfg;
  report.feature_count = m;
  report.k_grid = cfg.resolved_k_grid(m);
  report.split = split(features.rows(), cfg.train_fraction, derive_seed(cfg.seed, Stream::kSplit));

  const std::size_t threads = std::max<std::size_t>(1, cfg.selection.threads);
  const std::size_t outer = std::min(threads, cfg.n_repeats);
  StabilityConfig inner_cfg = cfg;
  inner_cfg.selection.threads = outer > 1 ? 1 : threads;

  for (Angle angle : expand(cfg.selection.target_angle)) {
    AngleStability result;
    result.angle = angle;
    result.runs.resize(cfg.n_repeats);
    parallel_for(cfg.n_repeats, outer, [&](std::size_t r) {
      result.runs[r] =
          run_repeat(features, angles, angle, report.split, inner_cfg, cfg.repeat_seed(r));
    });

    std::vector<IndexList> selected;
    for (const auto& run : result.runs) selected.push_back(run.selected);
    for (std::size_t model = 0; model < result.runs.front().models.size(); ++model) {
      ModelStability stats;
      stats.predictor = result.runs.front().models[model].predictor;
      std::vector<RunRanking> rankings;
      std::vector<std::vector<double>> importance;
      for (const auto& run : result.runs) {
        rankings.push_back(RunRanking{run.models[model].ranking, run.selected.size()});
        importance.push_back(run.models[model].importance);
      }
      stats.kuncheva = kuncheva_curve(rankings, report.k_grid, m);
      stats.spearman = pairwise_spearman(importance, selected);
      result.models.push_back(std::move(stats));
    }

    result.baseline.predictor = Predictor::kForest;
    std::vector<RunRanking> rankings;
    std::vector<std::vector<double>> importance;
    for (const auto& run : result.runs) {
      rankings.push_back(RunRanking{run.baseline_ranking, m});
      importance.push_back(run.baseline_importance);
    }
    result.baseline.kuncheva = kuncheva_curve(rankings, report.k_grid, m);
    result.baseline.spearman = pairwise_spearman(importance, {});
    report.angles.push_back(std::move(result));
  }
  return report;
}

}  // namespace tangled
