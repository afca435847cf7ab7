// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "tangled/corrgraph.hpp"
#include "tangled/forest.hpp"
#include "tangled/ingest.hpp"
#include "tangled/metrics.hpp"
#include "tangled/random.hpp"
#include "tangled/select.hpp"
#include "tangled/shap.hpp"
#include "tangled/stability.hpp"

using namespace tangled;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// Selection settings for the pipeline criteria: permutation importance with a
// single shuffle and more runs than the library default. Recovery uses small
// forests to fit 20 repetitions in the budget; the stability and accuracy
// checks use larger ones so that noise columns stay below the coverage cut on
// bootstrap resamples.
SelectionConfig acceptance_selection(std::uint64_t seed, std::size_t trees) {
  SelectionConfig cfg;
  cfg.importance = ImportanceBackend::kPermutation;
  cfg.permutation_repeats = 1;
  cfg.runs = 60;
  cfg.forest.n_trees = trees;
  cfg.seed = seed;
  cfg.forest.seed = seed;
  return cfg;
}

constexpr std::size_t kRecoveryTrees = 20;
constexpr std::size_t kStabilityTrees = 50;

constexpr std::uint64_t kReferenceSeed = 0;

std::string join(const IndexList& v) {
  std::string out;
  for (std::size_t j : v) out += (out.empty() ? "" : ",") + std::to_string(j);
  return out;
}

Dataset subset_rows(const Dataset& d, const IndexList& rows) {
  Dataset out;
  out.features.names = d.features.names;
  out.features.values.resize(static_cast<Eigen::Index>(rows.size()), d.features.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.values.row(static_cast<Eigen::Index>(i)) =
        d.features.values.row(static_cast<Eigen::Index>(rows[i]));
    out.angles.phi.push_back(d.angles.phi[rows[i]]);
    out.angles.psi.push_back(d.angles.psi[rows[i]]);
  }
  return out;
}

// Reference data, split and per-angle selection made on the training fold.
struct Reference {
  SyntheticData syn;
  DatasetSplit split;
  std::vector<SelectionResult> selections;
};

const Reference& reference() {
  static const Reference ref = [] {
    Reference r;
    SyntheticSpec spec;
    spec.seed = kReferenceSeed;
    r.syn = generate_synthetic(spec);
    r.split = tangled::split(spec.n_samples, 0.8, derive_seed(kReferenceSeed, Stream::kSplit));
    const Dataset train = subset_rows(r.syn.data, r.split.train);
    r.selections = run_pipeline(train.features, train.angles,
                                 acceptance_selection(kReferenceSeed, kStabilityTrees));
    return r;
  }();
  return ref;
}

Outcome graph_oracle() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit;
  std::size_t mismatches = 0;
  for (int g = 0; g < 1000; ++g) {
    const std::size_t m = 1 + static_cast<std::size_t>(g % 12);
    const double density = unit(rng) * 0.5;
    ThresholdGraph graph;
    graph.vertex_count = m;
    graph.tau = 0.8;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (unit(rng) < density) graph.edges.emplace_back(i, j);
      }
    }
    const ClusterPartition p = connected_components(graph);
    const auto expected = oracle::closure_components(m, graph.edges);
    bool same = p.components.size() == expected.size();
    for (std::size_t c = 0; same && c < expected.size(); ++c) {
      same = p.components[c] == expected[c];
    }
    for (std::size_t c = 0; same && c < p.components.size(); ++c) {
      for (std::size_t v : p.components[c]) same = same && p.assignment[v] == c;
    }
    if (!same) ++mismatches;
  }
  return {mismatches == 0, "1000 graphs, " + std::to_string(mismatches) + " mismatches"};
}

Outcome kuncheva_spearman_oracle() {
  std::size_t checked = 0;
  std::size_t bad = 0;
  for (std::size_t m = 2; m <= 8; ++m) {
    const std::uint32_t full = 1u << m;
    for (std::uint32_t sa = 1; sa < full; ++sa) {
      const auto k = static_cast<std::size_t>(__builtin_popcount(sa));
      if (k >= m) continue;
      for (std::uint32_t sb = 1; sb < full; ++sb) {
        if (static_cast<std::size_t>(__builtin_popcount(sb)) != k) continue;
        IndexList a;
        IndexList b;
        for (std::size_t i = 0; i < m; ++i) {
          if (sa & (1u << i)) a.push_back(i);
          if (sb & (1u << i)) b.push_back(i);
        }
        const auto r = static_cast<std::int64_t>(__builtin_popcount(sa & sb));
        const auto kk = static_cast<std::int64_t>(k);
        const auto mm = static_cast<std::int64_t>(m);
        // (r - k^2/m) / (k - k^2/m) with both sides scaled by m.
        const std::int64_t num = mm * r - kk * kk;
        const std::int64_t den = mm * kk - kk * kk;
        const KunchevaFraction f = kuncheva_fraction(a, b, k, m);
        const double value = kuncheva_pair(a, b, k, m);
        ++checked;
        if (f.denominator <= 0 || f.numerator * den != num * f.denominator ||
            std::abs(value - static_cast<double>(num) / static_cast<double>(den)) > 1e-15) {
          ++bad;
        }
      }
    }
  }

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit;
  std::size_t spearman_bad = 0;
  double worst = 0;
  int vectors = 0;
  while (vectors < 1000) {
    const std::size_t n = 2 + rng() % 40;
    const bool ties = rng() % 2 == 0;
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng() % 4) : unit(rng);
      y[i] = ties ? static_cast<double>(rng() % 3) : unit(rng) + 0.3 * x[i];
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    ++vectors;
    const double diff = std::abs(spearman(x, y) - oracle::spearman(x, y));
    worst = std::max(worst, diff);
    if (!(diff <= 1e-12)) ++spearman_bad;
  }
  return {bad == 0 && spearman_bad == 0,
          std::to_string(checked) + " kuncheva cases, " + std::to_string(bad) +
              " mismatches; 1000 spearman vectors, max diff " + fmt(worst, 3)};
}

Outcome treeshap_oracle() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit;
  double worst_local = 0;
  std::size_t rows_checked = 0;
  for (int f = 0; f < 50; ++f) {
    const std::size_t m = 2 + static_cast<std::size_t>(f % 11);
    const std::size_t n = 60 + rng() % 240;
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        // Rounded values give tied split candidates.
        const double v = unit(rng);
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            j % 3 == 0 ? std::round(v * 5) / 5 : v;
      }
      const auto row = x.row(static_cast<Eigen::Index>(i));
      y[i] = std::sin(4 * row(0)) + row(1) * row(m - 1) + 0.1 * unit(rng);
    }
    ForestParams p;
    p.n_trees = 5 + rng() % 20;
    p.min_samples_leaf = 1 + rng() % 6;
    if (f % 2 == 0) p.max_depth = 2 + rng() % 6;
    p.seed = static_cast<std::uint64_t>(f);
    const RegressionForest forest = fit_forest(x, y, p);
    const ShapMatrix shap = tree_shap(forest, x);
    const std::vector<double> pred = forest.predict(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double total = shap.base_value + shap.values.row(static_cast<Eigen::Index>(i)).sum();
      worst_local = std::max(worst_local, std::abs(total - pred[i]));
      ++rows_checked;
    }
  }

  double worst_brute = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 1 + static_cast<std::size_t>(t % 12);
    const RegressionTree tree = oracle::random_tree(rng, m, 8);
    for (int r = 0; r < 4; ++r) {
      std::vector<double> row(m);
      for (double& v : row) v = unit(rng);
      std::vector<double> phi(m, 0.0);
      tangled::tree_shap(tree, row, phi);
      const std::vector<double> expected = oracle::shapley(tree, row);
      for (std::size_t j = 0; j < m; ++j) {
        worst_brute = std::max(worst_brute, std::abs(phi[j] - expected[j]));
      }
    }
  }
  return {worst_local <= 1e-9 && worst_brute <= 1e-9,
          "local accuracy max error " + fmt(worst_local, 3) + " over " +
              std::to_string(rows_checked) + " rows of 50 forests; brute force max diff " +
              fmt(worst_brute, 3) + " on 50 trees"};
}

Outcome pipeline_recovery() {
  SyntheticSpec spec;
  spec.seed = kReferenceSeed;
  const SyntheticData syn = generate_synthetic(spec);
  int recovered = 0;
  std::string misses;
  for (int rep = 0; rep < 20; ++rep) {
    const auto results = run_pipeline(
        syn.data.features, syn.data.angles,
        acceptance_selection(static_cast<std::uint64_t>(rep), kRecoveryTrees));
    std::set<std::size_t> chosen;
    for (const auto& r : results) {
      for (std::size_t j : r.indices()) chosen.insert(j);
    }
    bool ok = true;
    for (std::size_t k = 0; k < syn.clusters.size(); ++k) {
      std::size_t picked = 0;
      for (std::size_t j : syn.clusters[k]) picked += chosen.count(j);
      if (picked != 1 || chosen.count(syn.drivers[k]) == 0) ok = false;
    }
    if (ok) {
      ++recovered;
    } else {
      misses += " " + std::to_string(rep);
    }
  }
  return {recovered >= 18, std::to_string(recovered) + "/20 repetitions recovered every driver" +
                               (misses.empty() ? "" : " (missed:" + misses + ")")};
}

double kuncheva_at(const std::vector<KunchevaPoint>& curve, std::size_t k) {
  for (const auto& p : curve) {
    if (p.k == k) return p.mean;
  }
  return std::nan("");
}

Outcome stability_superiority() {
  SyntheticSpec spec;
  spec.seed = kReferenceSeed;
  const SyntheticData syn = generate_synthetic(spec);
  StabilityConfig cfg;
  cfg.n_repeats = 10;
  cfg.seed = kReferenceSeed;
  cfg.selection = acceptance_selection(kReferenceSeed, kStabilityTrees);
  const StabilityReport report = run_stability(syn.data.features, syn.data.angles, cfg);
  // The check is on phi. For psi one dominant cluster fills the naive top-5 the
  // same way in every repeat, so its numbers are reported alongside only.
  bool pass = false;
  std::string detail;
  for (const auto& a : report.angles) {
    const double ours = kuncheva_at(a.model(Predictor::kForest).kuncheva, 5);
    const double naive = kuncheva_at(a.baseline.kuncheva, 5);
    if (a.angle == Angle::kPhi) {
      pass = ours >= 0.9 && ours - naive >= 0.15;
      detail = "phi k=5 " + fmt(ours) + " vs baseline " + fmt(naive) + detail;
    } else {
      detail += "; psi (not gated) k=5 " + fmt(ours) + " vs baseline " + fmt(naive);
    }
  }
  return {pass, detail};
}

Outcome refinement_contract() {
  std::mt19937_64 rng(16);
  std::exponential_distribution<double> expo(1.0);
  std::size_t bad = 0;
  for (int v = 0; v < 100; ++v) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> w(n);
    for (double& x : w) x = std::pow(expo(rng), 1 + static_cast<double>(v % 4));
    if (v % 5 == 0) w[rng() % n] = 0.0;
    double total = 0;
    for (double x : w) total += x;
    if (total == 0) w[0] = total = 1;
    for (double& x : w) x /= total;
    std::sort(w.begin(), w.end(), std::greater<>());
    const std::size_t cut = cumulative_cut(w, 0.99);
    double kept = 0;
    for (std::size_t i = 0; i < cut; ++i) kept += w[i];
    const double without = kept - w[cut - 1];
    if (!(kept >= 0.99 - 1e-9) || !(without < 0.99)) ++bad;
  }

  const Reference& ref = reference();
  std::string pipeline;
  for (const auto& r : ref.selections) {
    double total = 0;
    for (const auto& [feature, importance] : r.refined_order) total += importance;
    double kept = 0;
    for (const auto& s : r.selected) kept += s.refined_importance;
    const double without = kept - r.selected.back().refined_importance;
    if (std::abs(total - 1.0) > 1e-9 || !(kept >= 0.99 - 1e-9) || !(without < 0.99)) ++bad;
    pipeline += std::string(" ") + to_string(r.angle) + " " + std::to_string(r.selected.size()) +
                " kept " + fmt(kept, 6) + " without last " + fmt(without, 6) + ";";
  }
  return {bad == 0, "100 random vectors and the pipeline output, " + std::to_string(bad) +
                        " violations;" + pipeline};
}

Outcome predictive_sanity() {
  const Reference& ref = reference();
  const auto& data = ref.syn.data;
  IndexList all(data.features.values.cols());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  // Every split considers every column, so a small subset is not held to a
  // single random candidate per split. Default-mtry scores are printed too.
  auto score = [&](const IndexList& cols, Angle angle, bool every_column) {
    ForestParams params;
    params.seed = kReferenceSeed;
    if (every_column) params.mtry = cols.size();
    return evaluate_predictor(Predictor::kForest, cols, ref.split, data.features, data.angles, angle,
                              params)
        .r2_components;
  };
  bool pass = !ref.selections.empty();
  std::string detail;
  for (const auto& sel : ref.selections) {
    const double full = score(all, sel.angle, true);
    const double subset = score(sel.indices(), sel.angle, true);
    pass = pass && full >= 0.85 && subset >= full - 0.05;
    detail += std::string(detail.empty() ? "" : "; ") + to_string(sel.angle) + " all " + fmt(full) +
              ", selected {" + join(sel.indices()) + "} " + fmt(subset) + " (default mtry " +
              fmt(score(all, sel.angle, false)) + " / " + fmt(score(sel.indices(), sel.angle, false)) +
              ")";
  }
  return {pass, detail};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TANGLED_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string canonical_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (p.extension() != ".json") return ss.str();
  auto doc = nlohmann::ordered_json::parse(ss.str());
  doc.erase("generated_at");
  return doc.dump();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "tangled_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "log.txt";
  if (run_cli("synth --seed 5 --out " + (root / "data").string(), log) != 0) {
    return {false, "synth failed"};
  }
  const std::string common = "stability --features " + (root / "data" / "features.csv").string() +
                             " --angles " + (root / "data" / "angles.csv").string() +
                             " --repeats 3 --runs 10 --trees 20 --seed 4";
  std::vector<std::pair<std::string, fs::path>> runs;
  for (const char* threads : {"1", "1", "8", "8"}) {
    const fs::path out = root / ("run" + std::to_string(runs.size()));
    if (run_cli(common + " --threads " + threads + " --out " + out.string(), log) != 0) {
      return {false, "stability run failed at --threads " + std::string(threads)};
    }
    runs.emplace_back(threads, out);
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs[0].second)) files.push_back(e.path().filename());
  std::sort(files.begin(), files.end());
  std::size_t differing = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(runs[r].second)) names.push_back(e.path().filename());
    std::sort(names.begin(), names.end());
    if (names != files) return {false, "run " + std::to_string(r) + " wrote a different file set"};
    for (const auto& f : files) {
      if (canonical_file(runs[0].second / f) != canonical_file(runs[r].second / f)) ++differing;
    }
  }
  fs::remove_all(root);
  return {differing == 0 && !files.empty(),
          std::to_string(files.size()) + " report files compared across 4 runs (--threads 1, 8), " +
              std::to_string(differing) + " differ"};
}

Outcome encoding_invariants() {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  AngleTargets t;
  for (int i = 0; i < 10000; ++i) {
    t.phi.push_back(angle(rng));
    t.psi.push_back(i < 4 ? std::vector<double>{-kPi, std::nextafter(kPi, 0.0), 0.0, kPi / 2}[i] : angle(rng));
  }
  const EncodedTargets enc = encode_angles(t);
  double worst_norm = 0;
  double worst_round = 0;
  for (Angle a : {Angle::kPhi, Angle::kPsi}) {
    const EncodedTargets block = enc.components(a);
    const auto& truth = t.get(a);
    for (Eigen::Index i = 0; i < block.values.rows(); ++i) {
      const double c = block.values(i, 0);
      const double s = block.values(i, 1);
      worst_norm = std::max(worst_norm, std::abs(c * c + s * s - 1.0));
      const double back = decode_angle(c, s);
      // Compare on the circle so that pi and -pi agree.
      const double d = std::remainder(back - truth[static_cast<std::size_t>(i)], 2 * kPi);
      worst_round = std::max(worst_round, std::abs(d));
    }
  }
  return {worst_norm <= 1e-12 && worst_round <= 1e-12,
          "20000 angles, max |norm - 1| " + fmt(worst_norm, 3) + ", max round trip error " +
              fmt(worst_round, 3)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "graph components vs transitive closure", 5, graph_oracle},
      {2, "kuncheva and spearman oracles", 0, kuncheva_spearman_oracle},
      {3, "treeshap local accuracy and brute force", 60, treeshap_oracle},
      {4, "pipeline recovers the drivers", 300, pipeline_recovery},
      {5, "stability beats the naive baseline", 600, stability_superiority},
      {6, "refinement coverage contract", 0, refinement_contract},
      {7, "predictive sanity", 120, predictive_sanity},
      {8, "cli determinism across threads", 0, cli_determinism},
      {9, "angle encoding invariants", 0, encoding_invariants},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && wanted.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.budget_seconds, 4) + " s budget)";
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (o.pass ? "PASS" : "FAIL")
              << " " << o.detail << " (" << fmt(seconds, 3) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
