#include "tangled/report.hpp"

#include <charconv>
#include <functional>
#include <ostream>

#include "tangled/error.hpp"

namespace tangled {
namespace {

Json names_of(const IndexList& indices, const std::vector<std::string>& names) {
  Json out = Json::array();
  for (std::size_t j : indices) out.push_back(names.at(j));
  return out;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json node_json(const std::vector<TreeNode>& nodes, std::size_t i) {
  const TreeNode& node = nodes[i];
  Json out;
  if (!node.is_leaf()) {
    out["feature"] = node.feature;
    out["threshold"] = node.threshold;
  }
  out["cover"] = node.cover;
  out["node_value"] = node.value;
  if (!node.is_leaf()) {
    out["left"] = node_json(nodes, static_cast<std::size_t>(node.left));
    out["right"] = node_json(nodes, static_cast<std::size_t>(node.right));
  }
  return out;
}

std::int32_t read_node(const Json& doc, std::vector<TreeNode>& nodes, std::size_t depth) {
  if (depth > 10000) throw DataError("forest document nests too deeply");
  if (!doc.is_object()) throw DataError("forest node is not an object");
  const auto index = static_cast<std::int32_t>(nodes.size());
  nodes.push_back(TreeNode{-1, 0.0, -1, -1, doc.at("cover").get<double>(),
                           doc.at("node_value").get<double>()});
  const bool has_left = doc.contains("left");
  if (has_left != doc.contains("right")) throw DataError("forest node has a single child");
  if (has_left) {
    const auto feature = doc.at("feature").get<std::int32_t>();
    if (feature < 0) throw DataError("internal node with a negative feature");
    const double threshold = doc.at("threshold").get<double>();
    const std::int32_t left = read_node(doc.at("left"), nodes, depth + 1);
    const std::int32_t right = read_node(doc.at("right"), nodes, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(index)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
  }
  return index;
}

Json kuncheva_json(const std::vector<KunchevaPoint>& curve) {
  Json out = Json::array();
  for (const auto& point : curve) {
    Json pairs = Json::array();
    for (const auto& p : point.pairs) {
      pairs.push_back(Json{{"a", p.a}, {"b", p.b}, {"k_used", p.k_used}, {"value", p.value},
                           {"truncated", p.truncated}});
    }
    out.push_back(Json{{"k", point.k},
                       {"mean", point.mean},
                       {"stderr", point.stderr_mean},
                       {"pairs", std::move(pairs)}});
  }
  return out;
}

Json spearman_json(const SpearmanSummary& summary) {
  Json pairs = Json::array();
  for (const auto& p : summary.pairs) {
    pairs.push_back(Json::array({p.a, p.b, optional_number(p.rho)}));
  }
  return Json{{"pairs", std::move(pairs)}, {"mean", optional_number(summary.mean)}};
}

Json model_stability_json(const ModelStability& model) {
  return Json{{"kuncheva", kuncheva_json(model.kuncheva)},
              {"spearman", spearman_json(model.spearman)}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json ground_truth_json(const SyntheticData& synthetic) {
  Json clusters = Json::array();
  for (const auto& c : synthetic.clusters) clusters.push_back(c);
  Json noise = Json::array();
  std::vector<char> clustered(synthetic.data.features.cols(), 0);
  for (const auto& c : synthetic.clusters) {
    for (std::size_t j : c) clustered[j] = 1;
  }
  for (std::size_t j = 0; j < clustered.size(); ++j) {
    if (!clustered[j]) noise.push_back(j);
  }
  return Json{{"clusters", std::move(clusters)},
              {"drivers", synthetic.drivers},
              {"seed", synthetic.seed},
              {"phi_drivers", synthetic.phi_drivers},
              {"psi_drivers", synthetic.psi_drivers},
              {"noise", std::move(noise)},
              {"feature_names", synthetic.data.features.names}};
}

Json partition_json(const ClusterPartition& partition, double tau,
                    const IndexList& flagged_constant) {
  Json components = Json::array();
  for (const auto& c : partition.components) components.push_back(c);
  return Json{{"tau", tau}, {"components", std::move(components)},
              {"flagged_constant", flagged_constant}};
}

Json forest_params_json(const ForestParams& params) {
  return Json{{"n_trees", params.n_trees},
              {"mtry", params.mtry ? Json(*params.mtry) : Json("floor(m/3)")},
              {"min_samples_leaf", params.min_samples_leaf},
              {"max_depth", params.max_depth ? Json(*params.max_depth) : Json(nullptr)},
              {"bootstrap", params.bootstrap},
              {"seed", params.seed}};
}

Json selection_config_json(const SelectionConfig& cfg) {
  std::string angle = "both";
  if (cfg.target_angle == AngleSelection::kPhi) angle = "phi";
  if (cfg.target_angle == AngleSelection::kPsi) angle = "psi";
  return Json{{"tau", cfg.tau},
              {"runs", cfg.runs},
              {"coverage", cfg.coverage},
              {"importance", to_string(cfg.importance)},
              {"permutation_repeats", cfg.permutation_repeats},
              {"seed", cfg.seed},
              {"target_angle", angle},
              {"forest", forest_params_json(cfg.forest)}};
}

Json forest_json(const RegressionForest& forest) {
  Json trees = Json::array();
  for (const auto& tree : forest.trees) trees.push_back(node_json(tree.nodes(), 0));
  return Json{{"format", "tangled-forest"},
              {"version", kForestFormatVersion},
              {"feature_count", forest.feature_count},
              {"params", forest_params_json(forest.params)},
              {"trees", std::move(trees)}};
}

RegressionForest forest_from_json(const Json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "tangled-forest") {
      throw DataError("not a forest document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kForestFormatVersion) {
      throw DataError("unsupported forest format version " + std::to_string(version));
    }
    RegressionForest forest;
    forest.feature_count = doc.at("feature_count").get<std::size_t>();
    const Json& params = doc.at("params");
    forest.params.n_trees = params.at("n_trees").get<std::size_t>();
    if (params.at("mtry").is_number()) forest.params.mtry = params.at("mtry").get<std::size_t>();
    forest.params.min_samples_leaf = params.at("min_samples_leaf").get<std::size_t>();
    if (params.at("max_depth").is_number()) {
      forest.params.max_depth = params.at("max_depth").get<std::size_t>();
    }
    forest.params.bootstrap = params.at("bootstrap").get<bool>();
    forest.params.seed = params.at("seed").get<std::uint64_t>();
    for (const auto& tree : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      read_node(tree, nodes, 0);
      forest.trees.emplace_back(std::move(nodes));
    }
    forest.validate();
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed forest document: ") + e.what());
  }
}

void write_shap_csv(std::ostream& out, const ShapMatrix& shap,
                    const std::vector<std::string>& names) {
  if (names.size() != static_cast<std::size_t>(shap.values.cols())) {
    throw DataError("SHAP export: one name per column is required");
  }
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < shap.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < shap.values.cols(); ++j) {
      out << (j ? "," : "") << format_double(shap.values(i, j));
    }
    out << '\n';
  }
}

Json shap_sidecar_json(const ShapMatrix& shap) {
  return Json{{"base_value", shap.base_value},
              {"rows", shap.values.rows()},
              {"columns", shap.values.cols()}};
}

Json selection_json(const SelectionResult& result, const FeatureMatrix& features) {
  const auto& names = features.names;
  Json reps = Json::array();
  for (const auto& c : result.representatives.clusters) {
    Json candidates = Json::array();
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      candidates.push_back(Json{{"feature", c.candidates[i]},
                                {"name", names.at(c.candidates[i])},
                                {"runs_evaluated", c.runs_evaluated[i]},
                                {"mean_importance", c.candidate_importance[i]}});
    }
    reps.push_back(Json{{"cluster_id", c.cluster_id},
                        {"feature", c.feature},
                        {"name", names.at(c.feature)},
                        {"mean_importance", c.mean_importance},
                        {"candidates", std::move(candidates)}});
  }
  Json refined = Json::array();
  for (const auto& [feature, importance] : result.refined_order) {
    refined.push_back(
        Json{{"feature", feature}, {"name", names.at(feature)}, {"importance", importance}});
  }
  Json selected = Json::array();
  for (const auto& s : result.selected) {
    selected.push_back(Json{{"feature", s.feature},
                            {"name", names.at(s.feature)},
                            {"cluster_id", s.cluster_id},
                            {"ensemble_importance", s.ensemble_importance},
                            {"refined_importance", s.refined_importance},
                            {"cumulative_at_inclusion", s.cumulative_at_inclusion}});
  }
  const IndexList indices = result.indices();
  return Json{{"kind", "selection"},
              {"angle", to_string(result.angle)},
              {"feature_count", features.cols()},
              {"config", selection_config_json(result.config)},
              {"partition", partition_json(result.partition, result.config.tau,
                                           result.constant_features)},
              {"representatives", std::move(reps)},
              {"refined_order", std::move(refined)},
              {"selected", std::move(selected)},
              {"selected_indices", indices},
              {"selected_names", names_of(indices, names)}};
}

SelectionRecord selection_from_json(const Json& doc) {
  try {
    if (!doc.is_object() || doc.value("kind", "") != "selection") {
      throw DataError("not a selection document");
    }
    SelectionRecord record;
    const std::string angle = doc.at("angle").get<std::string>();
    if (angle == "phi") {
      record.angle = Angle::kPhi;
    } else if (angle == "psi") {
      record.angle = Angle::kPsi;
    } else {
      throw DataError("selection angle must be phi or psi, got '" + angle + "'");
    }
    record.selected = doc.at("selected_indices").get<IndexList>();
    record.names = doc.at("selected_names").get<std::vector<std::string>>();
    if (record.selected.empty()) throw DataError("selection is empty");
    if (record.names.size() != record.selected.size()) {
      throw DataError("selection names and indices disagree");
    }
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed selection document: ") + e.what());
  }
}

Json accuracy_json(const AngleAccuracy& accuracy) {
  return Json{{"rmse_components", accuracy.rmse_components},
              {"r2_components", accuracy.r2_components},
              {"rmse_angular", accuracy.rmse_angular},
              {"r2_angular", accuracy.r2_angular}};
}

Json stability_json(const StabilityReport& report, const AngleStability& angle,
                    const FeatureMatrix& features) {
  const auto& names = features.names;
  Json runs = Json::array();
  Json accuracy = Json::object();
  for (std::size_t r = 0; r < angle.runs.size(); ++r) {
    const auto& run = angle.runs[r];
    Json models = Json::object();
    for (const auto& model : run.models) {
      models[to_string(model.predictor)] = Json{{"importance", model.importance},
                                                {"ranking", model.ranking},
                                                {"accuracy", accuracy_json(model.accuracy)}};
      accuracy[to_string(model.predictor)].push_back(accuracy_json(model.accuracy));
    }
    runs.push_back(Json{{"repeat", r},
                        {"seed", run.seed},
                        {"selected", run.selected},
                        {"selected_names", names_of(run.selected, names)},
                        {"models", std::move(models)},
                        {"baseline", Json{{"importance", run.baseline_importance},
                                          {"ranking", run.baseline_ranking}}}});
  }
  const ModelStability& forest = angle.model(Predictor::kForest);
  Json models = Json::object();
  for (const auto& m : angle.models) models[to_string(m.predictor)] = model_stability_json(m);

  const auto& cfg = report.config;
  return Json{{"kind", "stability"},
              {"angle", to_string(angle.angle)},
              {"feature_count", report.feature_count},
              {"feature_names", names},
              {"config", Json{{"repeats", cfg.n_repeats},
                              {"train_fraction", cfg.train_fraction},
                              {"k_grid", report.k_grid},
                              {"seed", cfg.seed},
                              {"selection", selection_config_json(cfg.selection)}}},
              {"split", Json{{"train_size", report.split.train.size()},
                             {"test_size", report.split.test.size()}}},
              {"runs", std::move(runs)},
              {"kuncheva", kuncheva_json(forest.kuncheva)},
              {"spearman", spearman_json(forest.spearman)},
              {"models", std::move(models)},
              {"baseline", model_stability_json(angle.baseline)},
              {"accuracy", std::move(accuracy)}};
}

void write_kuncheva_csv(std::ostream& out, const std::vector<KunchevaPoint>& curve) {
  out << "k,mean,stderr\n";
  for (const auto& point : curve) {
    out << point.k << ',' << format_double(point.mean) << ',' << format_double(point.stderr_mean)
        << '\n';
  }
}

}  // namespace tangled
