#include "tangled/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "tangled/error.hpp"

namespace tangled {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) +
                    " (expected " + std::string(want) + ")");
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad_value(key, value, "true or false");
}

const char* angle_selection_name(AngleSelection a) {
  switch (a) {
    case AngleSelection::kPhi:
      return "phi";
    case AngleSelection::kPsi:
      return "psi";
    case AngleSelection::kBoth:
      break;
  }
  return "both";
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  return {"tau",          "runs",           "coverage",
          "trees",        "mtry",           "min_leaf",
          "max_depth",    "bootstrap",      "importance",
          "perm_repeats", "repeats",        "train_fraction",
          "k_max",        "seed",           "threads",
          "angle",        "angle_unit",     "features",
          "angles",       "selection",      "out",
          "synth.clusters", "synth.cluster_size", "synth.noise_features",
          "synth.samples", "synth.intra_correlation", "synth.noise_sd",
          "synth.target_function"};
}

void RunConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string_view key = trim(raw_key);
  const std::string_view value = trim(raw_value);
  auto& forest = selection.forest;
  if (key == "tau") {
    selection.tau = parse_real(key, value);
  } else if (key == "runs") {
    selection.runs = parse_unsigned(key, value);
  } else if (key == "coverage") {
    selection.coverage = parse_real(key, value);
  } else if (key == "trees") {
    forest.n_trees = parse_unsigned(key, value);
  } else if (key == "mtry") {
    if (value == "auto") {
      forest.mtry.reset();
    } else {
      forest.mtry = parse_unsigned(key, value);
    }
  } else if (key == "min_leaf") {
    forest.min_samples_leaf = parse_unsigned(key, value);
  } else if (key == "max_depth") {
    if (value == "none") {
      forest.max_depth.reset();
    } else {
      forest.max_depth = parse_unsigned(key, value);
    }
  } else if (key == "bootstrap") {
    forest.bootstrap = parse_bool(key, value);
  } else if (key == "importance") {
    if (value == "impurity") {
      selection.importance = ImportanceBackend::kImpurity;
    } else if (value == "permutation") {
      selection.importance = ImportanceBackend::kPermutation;
    } else {
      bad_value(key, value, "impurity or permutation");
    }
  } else if (key == "perm_repeats") {
    selection.permutation_repeats = parse_unsigned(key, value);
  } else if (key == "repeats") {
    repeats = parse_unsigned(key, value);
  } else if (key == "train_fraction") {
    train_fraction = parse_real(key, value);
  } else if (key == "k_max") {
    k_max = parse_unsigned(key, value);
  } else if (key == "seed") {
    seed = parse_unsigned(key, value);
  } else if (key == "threads") {
    selection.threads = parse_unsigned(key, value);
  } else if (key == "angle") {
    if (value == "phi") {
      selection.target_angle = AngleSelection::kPhi;
    } else if (value == "psi") {
      selection.target_angle = AngleSelection::kPsi;
    } else if (value == "both") {
      selection.target_angle = AngleSelection::kBoth;
    } else {
      bad_value(key, value, "phi, psi or both");
    }
  } else if (key == "angle_unit") {
    if (value == "rad") {
      angle_unit = AngleUnit::kRadians;
    } else if (value == "deg") {
      angle_unit = AngleUnit::kDegrees;
    } else {
      bad_value(key, value, "rad or deg");
    }
  } else if (key == "features") {
    features_path = value;
  } else if (key == "angles") {
    angles_path = value;
  } else if (key == "selection") {
    selection_path = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "synth.clusters") {
    const std::size_t size = synth.cluster_sizes.empty() ? 4 : synth.cluster_sizes.front();
    synth.n_clusters = parse_unsigned(key, value);
    synth.cluster_sizes.assign(synth.n_clusters, size);
  } else if (key == "synth.cluster_size") {
    synth.cluster_sizes.assign(synth.n_clusters, parse_unsigned(key, value));
  } else if (key == "synth.noise_features") {
    synth.n_noise_features = parse_unsigned(key, value);
  } else if (key == "synth.samples") {
    synth.n_samples = parse_unsigned(key, value);
  } else if (key == "synth.intra_correlation") {
    synth.intra_correlation = parse_real(key, value);
  } else if (key == "synth.noise_sd") {
    synth.noise_sd = parse_real(key, value);
  } else if (key == "synth.target_function") {
    synth.target_function = value;
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    set(text.substr(0, eq), text.substr(eq + 1));
  }
}

void RunConfig::validate() const {
  selection.validate();
  if (selection.threads == 0) throw ConfigError("threads must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (k_max && *k_max == 0) throw ConfigError("k_max must be >= 1");
  synth.validate();
}

SelectionConfig RunConfig::selection_config() const {
  SelectionConfig cfg = selection;
  cfg.seed = seed;
  cfg.forest.seed = seed;
  return cfg;
}

StabilityConfig RunConfig::stability_config(std::size_t feature_count) const {
  StabilityConfig cfg;
  cfg.n_repeats = repeats;
  cfg.train_fraction = train_fraction;
  cfg.selection = selection_config();
  cfg.seed = seed;
  if (k_max) {
    for (std::size_t k = 1; k <= *k_max; ++k) cfg.k_grid.push_back(k);
  } else {
    cfg.k_grid = cfg.resolved_k_grid(feature_count);
  }
  return cfg;
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec spec = synth;
  spec.seed = seed;
  return spec;
}

Json RunConfig::to_json() const {
  const SelectionConfig sel = selection_config();
  return Json{{"seed", seed},
              {"tau", sel.tau},
              {"runs", sel.runs},
              {"coverage", sel.coverage},
              {"trees", sel.forest.n_trees},
              {"mtry", sel.forest.mtry ? Json(*sel.forest.mtry) : Json("auto")},
              {"min_leaf", sel.forest.min_samples_leaf},
              {"max_depth", sel.forest.max_depth ? Json(*sel.forest.max_depth) : Json("none")},
              {"bootstrap", sel.forest.bootstrap},
              {"importance", to_string(sel.importance)},
              {"perm_repeats", sel.permutation_repeats},
              {"repeats", repeats},
              {"train_fraction", train_fraction},
              {"k_max", k_max ? Json(*k_max) : Json("auto")},
              {"angle", angle_selection_name(sel.target_angle)},
              {"angle_unit", angle_unit == AngleUnit::kRadians ? "rad" : "deg"},
              {"features", features_path},
              {"angles", angles_path},
              {"selection", selection_path},
              {"synth", Json{{"clusters", synth.n_clusters},
                             {"cluster_sizes", synth.cluster_sizes},
                             {"noise_features", synth.n_noise_features},
                             {"samples", synth.n_samples},
                             {"intra_correlation", synth.intra_correlation},
                             {"noise_sd", synth.noise_sd},
                             {"target_function", synth.target_function}}}};
}

}  // namespace tangled
