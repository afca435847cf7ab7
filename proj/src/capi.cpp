#include "tangled/tangled.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <new>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tangled/config.hpp"
#include "tangled/error.hpp"
#include "tangled/metrics.hpp"
#include "tangled/random.hpp"
#include "tangled/report.hpp"
#include "tangled/select.hpp"
#include "tangled/stability.hpp"

struct tf_config {
  tangled::RunConfig run;
  std::string json;
};

struct tf_dataset {
  tangled::Dataset data;
};

struct tf_result {
  std::vector<std::pair<std::string, std::string>> artifacts;
  std::string summary;
  std::vector<tangled::IndexList> selected;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
tf_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TF_OK;
  } catch (const tangled::ConfigError& e) {
    g_last_error = e.what();
    return TF_ERR_CONFIG;
  } catch (const tangled::DataError& e) {
    g_last_error = e.what();
    return TF_ERR_DATA;
  } catch (const tangled::DomainError& e) {
    g_last_error = e.what();
    return TF_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return TF_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw tangled::ConfigError(std::string(what) + " is null");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Provenance header shared by every JSON artifact.
std::string finish_document(tangled::Json doc, const tangled::RunConfig& run) {
  doc["run_config"] = run.to_json();
  doc["generated_at"] = utc_timestamp();
  return doc.dump(2) + "\n";
}

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void check_dataset(const tf_dataset* dataset) {
  require(dataset, "dataset");
  dataset->data.features.validate();
  dataset->data.angles.validate();
  if (dataset->data.angles.size() != dataset->data.features.rows()) {
    throw tangled::DataError("dimension mismatch: features have " +
                             std::to_string(dataset->data.features.rows()) +
                             " rows, angles have " + std::to_string(dataset->data.angles.size()));
  }
}

}  // namespace

extern "C" {

const char* tf_version(void) { return "1.0.0"; }

const char* tf_last_error(void) { return g_last_error.c_str(); }

tf_status tf_config_create(tf_config** out) {
  return guarded([&] {
    require(out, "output pointer");
    *out = new tf_config();
  });
}

void tf_config_destroy(tf_config* config) { delete config; }

tf_status tf_config_set(tf_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->run.set(key, value);
  });
}

tf_status tf_config_load_file(tf_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->run.load_file(path);
  });
}

tf_status tf_config_json(tf_config* config, const char** json) {
  return guarded([&] {
    require(config, "config");
    require(json, "output pointer");
    config->json = config->run.to_json().dump(2);
    *json = config->json.c_str();
  });
}

const char* tf_config_keys(void) {
  static const std::string keys = [] {
    std::string out;
    for (const auto& k : tangled::RunConfig::keys()) out += k + "\n";
    return out;
  }();
  return keys.c_str();
}

tf_status tf_dataset_load(const tf_config* config, tf_dataset** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output pointer");
    const auto& run = config->run;
    if (run.features_path.empty()) throw tangled::ConfigError("features path is not set");
    if (run.angles_path.empty()) throw tangled::ConfigError("angles path is not set");
    auto dataset = std::make_unique<tf_dataset>();
    dataset->data = tangled::load_csv(run.features_path, run.angles_path, run.angle_unit);
    *out = dataset.release();
  });
}

tf_status tf_dataset_from_arrays(const double* values, size_t rows, size_t cols,
                                 const char* const* names, const double* phi, const double* psi,
                                 tf_dataset** out) {
  return guarded([&] {
    require(values, "values");
    require(names, "names");
    require(phi, "phi");
    require(psi, "psi");
    require(out, "output pointer");
    auto dataset = std::make_unique<tf_dataset>();
    auto& features = dataset->data.features;
    features.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < rows; ++i) {
      for (size_t j = 0; j < cols; ++j) {
        features.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            values[i * cols + j];
      }
    }
    for (size_t j = 0; j < cols; ++j) {
      require(names[j], "feature name");
      features.names.emplace_back(names[j]);
    }
    auto& angles = dataset->data.angles;
    for (size_t i = 0; i < rows; ++i) {
      angles.phi.push_back(tangled::wrap_angle(phi[i]));
      angles.psi.push_back(tangled::wrap_angle(psi[i]));
    }
    check_dataset(dataset.get());
    *out = dataset.release();
  });
}

void tf_dataset_destroy(tf_dataset* dataset) { delete dataset; }

size_t tf_dataset_rows(const tf_dataset* dataset) {
  return dataset ? dataset->data.features.rows() : 0;
}

size_t tf_dataset_cols(const tf_dataset* dataset) {
  return dataset ? dataset->data.features.cols() : 0;
}

tf_status tf_select(const tf_config* config, const tf_dataset* dataset, tf_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output pointer");
    check_dataset(dataset);
    const auto& run = config->run;
    run.validate();
    const auto& data = dataset->data;
    const auto results =
        tangled::run_pipeline(data.features, data.angles, run.selection_config());

    auto result = std::make_unique<tf_result>();
    std::string table = "angle  rank  feature               cluster  refined     cumulative\n";
    for (const auto& r : results) {
      const std::string angle = tangled::to_string(r.angle);
      result->artifacts.emplace_back("selection_" + angle + ".json",
                                     finish_document(tangled::selection_json(r, data.features), run));
      result->selected.push_back(r.indices());
      for (std::size_t i = 0; i < r.selected.size(); ++i) {
        const auto& s = r.selected[i];
        table += pad(angle, 7) + pad(std::to_string(i + 1), 6) +
                 pad(data.features.names[s.feature], 22) + pad(std::to_string(s.cluster_id), 9) +
                 pad(fmt("%.6f", s.refined_importance), 12) +
                 fmt("%.6f", s.cumulative_at_inclusion) + "\n";
      }
      table += angle + ": " + std::to_string(r.selected.size()) + " selected from " +
               std::to_string(r.partition.size()) + " clusters over " +
               std::to_string(data.features.cols()) + " features\n";
    }
    result->summary = std::move(table);
    *out = result.release();
  });
}

tf_status tf_stability(const tf_config* config, const tf_dataset* dataset, tf_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output pointer");
    check_dataset(dataset);
    const auto& run = config->run;
    run.validate();
    const auto& data = dataset->data;
    const tangled::StabilityConfig cfg = run.stability_config(data.features.cols());
    const tangled::StabilityReport report =
        tangled::run_stability(data.features, data.angles, cfg);

    auto result = std::make_unique<tf_result>();
    std::string table;
    for (const auto& angle : report.angles) {
      const std::string name = tangled::to_string(angle.angle);
      result->artifacts.emplace_back(
          "stability_" + name + ".json",
          finish_document(tangled::stability_json(report, angle, data.features), run));
      const std::pair<const char*, const std::vector<tangled::KunchevaPoint>*> curves[] = {
          {"", &angle.model(tangled::Predictor::kForest).kuncheva},
          {"_ols", &angle.model(tangled::Predictor::kOls).kuncheva},
          {"_baseline", &angle.baseline.kuncheva}};
      for (const auto& [suffix, curve] : curves) {
        std::ostringstream csv;
        tangled::write_kuncheva_csv(csv, *curve);
        result->artifacts.emplace_back("kuncheva_" + name + suffix + ".csv", csv.str());
      }

      table += name + ": " + std::to_string(angle.runs.size()) + " repeats\n";
      table += "  k    forest      ols         baseline\n";
      const auto& forest = angle.model(tangled::Predictor::kForest).kuncheva;
      const auto& ols = angle.model(tangled::Predictor::kOls).kuncheva;
      for (std::size_t i = 0; i < forest.size(); ++i) {
        table += "  " + pad(std::to_string(forest[i].k), 5) + pad(fmt("%.4f", forest[i].mean), 12) +
                 pad(fmt("%.4f", ols[i].mean), 12) + fmt("%.4f", angle.baseline.kuncheva[i].mean) +
                 "\n";
      }
      const auto& rho = angle.model(tangled::Predictor::kForest).spearman.mean;
      table += "  spearman (forest): " + (rho ? fmt("%.4f", *rho) : std::string("undefined")) + "\n";
      double r2 = 0.0;
      for (const auto& rep : angle.runs) r2 += rep.models.front().accuracy.r2_components;
      table += "  mean test r2_components (forest): " +
               fmt("%.4f", r2 / static_cast<double>(angle.runs.size())) + "\n";
    }
    result->summary = std::move(table);
    *out = result.release();
  });
}

tf_status tf_evaluate(const tf_config* config, const tf_dataset* dataset,
                      const char* selection_json, tf_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output pointer");
    require(selection_json, "selection document");
    check_dataset(dataset);
    const auto& run = config->run;
    run.validate();
    const auto& data = dataset->data;

    const tangled::Json doc = tangled::Json::parse(selection_json, nullptr, false);
    if (doc.is_discarded()) throw tangled::DataError("selection document is not valid JSON");
    const tangled::SelectionRecord record = tangled::selection_from_json(doc);
    for (std::size_t i = 0; i < record.selected.size(); ++i) {
      const std::size_t j = record.selected[i];
      if (j >= data.features.cols() || data.features.names[j] != record.names[i]) {
        throw tangled::DataError("selected feature '" + record.names[i] +
                                 "' does not match the feature matrix");
      }
    }

    const tangled::SelectionConfig sel = run.selection_config();
    const tangled::DatasetSplit split = tangled::split(
        data.features.rows(), run.train_fraction, tangled::derive_seed(run.seed, tangled::Stream::kSplit));
    tangled::Json accuracy = tangled::Json::object();
    std::string table = "predictor  rmse_components  r2_components  rmse_angular  r2_angular\n";
    for (auto predictor : {tangled::Predictor::kForest, tangled::Predictor::kOls}) {
      const tangled::AngleAccuracy acc =
          tangled::evaluate_predictor(predictor, record.selected, split, data.features,
                                      data.angles, record.angle, sel.forest, sel.threads);
      accuracy[tangled::to_string(predictor)] = tangled::accuracy_json(acc);
      table += pad(tangled::to_string(predictor), 11) + pad(fmt("%.6f", acc.rmse_components), 17) +
               pad(fmt("%.6f", acc.r2_components), 15) + pad(fmt("%.6f", acc.rmse_angular), 14) +
               fmt("%.6f", acc.r2_angular) + "\n";
    }
    const std::string angle = tangled::to_string(record.angle);
    tangled::Json report{{"kind", "accuracy"},
                         {"angle", angle},
                         {"selected_indices", record.selected},
                         {"selected_names", record.names},
                         {"split", tangled::Json{{"train_size", split.train.size()},
                                                 {"test_size", split.test.size()}}},
                         {"accuracy", std::move(accuracy)}};
    auto result = std::make_unique<tf_result>();
    result->artifacts.emplace_back("accuracy_" + angle + ".json",
                                   finish_document(std::move(report), run));
    result->selected.push_back(record.selected);
    result->summary = angle + " on " + std::to_string(record.selected.size()) +
                      " selected features\n" + table;
    *out = result.release();
  });
}

tf_status tf_synth(const tf_config* config, tf_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output pointer");
    const auto& run = config->run;
    run.validate();
    const tangled::SyntheticData synthetic = tangled::generate_synthetic(run.synthetic_spec());

    auto result = std::make_unique<tf_result>();
    std::ostringstream features;
    tangled::write_features_csv(features, synthetic.data.features);
    std::ostringstream angles;
    tangled::write_angles_csv(angles, synthetic.data.angles);
    result->artifacts.emplace_back("features.csv", features.str());
    result->artifacts.emplace_back("angles.csv", angles.str());
    tangled::Json truth = tangled::ground_truth_json(synthetic);
    truth["run_config"] = run.to_json();
    result->artifacts.emplace_back("ground_truth.json", truth.dump(2) + "\n");
    result->summary = std::to_string(synthetic.data.features.rows()) + " samples, " +
                      std::to_string(synthetic.data.features.cols()) + " features, " +
                      std::to_string(synthetic.clusters.size()) + " clusters, seed " +
                      std::to_string(synthetic.seed) + "\n";
    *out = result.release();
  });
}

void tf_result_destroy(tf_result* result) { delete result; }

size_t tf_result_artifact_count(const tf_result* result) {
  return result ? result->artifacts.size() : 0;
}

tf_status tf_result_artifact(const tf_result* result, size_t index, const char** name,
                             const char** content, size_t* length) {
  return guarded([&] {
    require(result, "result");
    if (index >= result->artifacts.size()) throw tangled::ConfigError("artifact index out of range");
    const auto& [file, text] = result->artifacts[index];
    if (name) *name = file.c_str();
    if (content) *content = text.c_str();
    if (length) *length = text.size();
  });
}

const char* tf_result_summary(const tf_result* result) {
  return result ? result->summary.c_str() : "";
}

tf_status tf_result_selected(const tf_result* result, size_t angle_index, size_t* indices,
                             size_t capacity, size_t* count) {
  return guarded([&] {
    require(result, "result");
    require(count, "count pointer");
    if (angle_index >= result->selected.size()) {
      throw tangled::ConfigError("angle index out of range");
    }
    const auto& selected = result->selected[angle_index];
    *count = selected.size();
    if (indices) {
      for (size_t i = 0; i < selected.size() && i < capacity; ++i) indices[i] = selected[i];
    }
  });
}

}  // extern "C"
