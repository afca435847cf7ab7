#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "tangled/corrgraph.hpp"
#include "tangled/forest.hpp"
#include "tangled/metrics.hpp"
#include "tangled/select.hpp"
#include "tangled/shap.hpp"
#include "tangled/stability.hpp"

namespace tangled {

using Json = nlohmann::ordered_json;

inline constexpr int kForestFormatVersion = 1;

Json ground_truth_json(const SyntheticData& synthetic);
Json partition_json(const ClusterPartition& partition, double tau,
                    const IndexList& flagged_constant);

Json forest_params_json(const ForestParams& params);
Json selection_config_json(const SelectionConfig& cfg);

/// Versioned document; nodes nest as {feature, threshold, cover, node_value,
/// left, right}, leaves carry only cover and node_value.
Json forest_json(const RegressionForest& forest);
/// Rebuilds a forest and validates its invariants. Throws DataError.
RegressionForest forest_from_json(const Json& doc);

/// Header of feature names, one row per observation.
void write_shap_csv(std::ostream& out, const ShapMatrix& shap,
                    const std::vector<std::string>& names);
Json shap_sidecar_json(const ShapMatrix& shap);

Json selection_json(const SelectionResult& result, const FeatureMatrix& features);

/// The fields cmd_evaluate needs back from a selection document.
struct SelectionRecord {
  Angle angle = Angle::kPhi;
  IndexList selected;
  std::vector<std::string> names;
};
/// Throws DataError on a malformed or empty selection.
SelectionRecord selection_from_json(const Json& doc);

Json accuracy_json(const AngleAccuracy& accuracy);

/// Stability document for one angle, forest curves at the top level.
Json stability_json(const StabilityReport& report, const AngleStability& angle,
                    const FeatureMatrix& features);
/// Columns k, mean, stderr for the forest curve.
void write_kuncheva_csv(std::ostream& out, const std::vector<KunchevaPoint>& curve);

/// Shortest round-trip decimal.
std::string format_double(double value);

}  // namespace tangled
