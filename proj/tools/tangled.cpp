// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "tangled/tangled.h"

namespace fs = std::filesystem;

namespace {

const char* kind_of(int code) {
  switch (code) {
    case TF_ERR_CONFIG:
      return "config";
    case TF_ERR_DATA:
      return "data";
    default:
      return "internal";
  }
}

// One line on stderr: tangled: error code=<n> kind=<kind> message="<text>"
int fail(int code, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += (c == '\n' ? ' ' : c);
  }
  std::cerr << "tangled: error code=" << code << " kind=" << kind_of(code) << " message=\""
            << escaped << "\"\n";
  return code;
}

struct CliError {
  int code;
  std::string message;
};

void check(tf_status status) {
  if (status != TF_OK) throw CliError{static_cast<int>(status), tf_last_error()};
}

struct ConfigDeleter {
  void operator()(tf_config* p) const { tf_config_destroy(p); }
};
struct DatasetDeleter {
  void operator()(tf_dataset* p) const { tf_dataset_destroy(p); }
};
struct ResultDeleter {
  void operator()(tf_result* p) const { tf_result_destroy(p); }
};
using ConfigPtr = std::unique_ptr<tf_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<tf_dataset, DatasetDeleter>;
using ResultPtr = std::unique_ptr<tf_result, ResultDeleter>;

// Every artifact goes to a temporary name first; the renames happen only once
// all of them are on disk, so a failure never leaves partial output behind.
void write_artifacts(const tf_result* result, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw CliError{TF_ERR_CONFIG, "cannot create output directory " + out_dir.string()};

  std::vector<std::pair<fs::path, fs::path>> staged;
  auto discard = [&] {
    for (const auto& [tmp, _] : staged) fs::remove(tmp, ec);
  };
  const std::size_t count = tf_result_artifact_count(result);
  for (std::size_t i = 0; i < count; ++i) {
    const char* name = nullptr;
    const char* content = nullptr;
    std::size_t length = 0;
    check(tf_result_artifact(result, i, &name, &content, &length));
    const fs::path target = out_dir / name;
    const fs::path tmp = out_dir / ("." + std::string(name) + ".tmp" + std::to_string(::getpid()));
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) out.write(content, static_cast<std::streamsize>(length));
    out.close();
    if (!out) {
      fs::remove(tmp, ec);
      discard();
      throw CliError{TF_ERR_CONFIG, "cannot write " + target.string()};
    }
    staged.emplace_back(tmp, target);
  }
  for (const auto& [tmp, target] : staged) {
    fs::rename(tmp, target, ec);
    if (ec) {
      discard();
      throw CliError{TF_ERR_INTERNAL, "cannot move output into place: " + target.string()};
    }
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{TF_ERR_DATA, "cannot open selection file " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Overrides {
  std::string config_file;
  std::string selection_file;
  std::map<std::string, std::string> values;
};

void add_shared_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "key=value config file (flags win)");
  const std::pair<const char*, const char*> flags[] = {
      {"features", "features CSV"},
      {"angles", "angles CSV with header phi,psi"},
      {"angle-unit", "rad or deg"},
      {"angle", "phi, psi or both"},
      {"tau", "correlation threshold in (0, 1]"},
      {"runs", "ensemble runs R"},
      {"coverage", "cumulative importance to retain, in (0, 1]"},
      {"trees", "trees per forest"},
      {"mtry", "features tried per split, or auto"},
      {"min-leaf", "minimum samples per leaf"},
      {"max-depth", "tree depth limit, or none"},
      {"importance", "impurity or permutation"},
      {"perm-repeats", "shuffles per feature for permutation importance"},
      {"repeats", "stability repeats"},
      {"train-fraction", "training share of the split"},
      {"k-max", "largest k of the Kuncheva sweep"},
      {"seed", "master seed"},
      {"threads", "worker threads"},
      {"out", "output directory"},
  };
  for (const auto& [flag, help] : flags) {
    std::string key = flag;
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    cmd->add_option_function<std::string>(
        std::string("--") + flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  }
}

void add_synth_flags(CLI::App* cmd, Overrides& o) {
  const std::pair<const char*, const char*> flags[] = {
      {"clusters", "number of correlated clusters"},
      {"cluster-size", "members per cluster"},
      {"noise-features", "independent noise columns"},
      {"samples", "rows"},
      {"intra-correlation", "target within-cluster correlation"},
      {"noise-sd", "target noise standard deviation"},
  };
  for (const auto& [flag, help] : flags) {
    std::string key = std::string("synth.") + flag;
    for (char& c : key) {
      if (c == '-') c = '_';
    }
    cmd->add_option_function<std::string>(
        std::string("--") + flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  }
}

ConfigPtr build_config(const Overrides& o) {
  tf_config* raw = nullptr;
  check(tf_config_create(&raw));
  ConfigPtr config(raw);
  if (!o.config_file.empty()) check(tf_config_load_file(config.get(), o.config_file.c_str()));
  for (const auto& [key, value] : o.values) {
    check(tf_config_set(config.get(), key.c_str(), value.c_str()));
  }
  return config;
}

DatasetPtr load_dataset(const tf_config* config) {
  tf_dataset* raw = nullptr;
  check(tf_dataset_load(config, &raw));
  return DatasetPtr(raw);
}

std::string out_dir(const Overrides& o) {
  const auto it = o.values.find("out");
  return it == o.values.end() ? std::string(".") : it->second;
}

int finish(const tf_result* result, const Overrides& o) {
  write_artifacts(result, out_dir(o));
  std::cout << tf_result_summary(result);
  const std::size_t count = tf_result_artifact_count(result);
  for (std::size_t i = 0; i < count; ++i) {
    const char* name = nullptr;
    check(tf_result_artifact(result, i, &name, nullptr, nullptr));
    std::cout << "wrote " << (fs::path(out_dir(o)) / name).string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-aware feature selection for torsion-angle targets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tf_version()));

  Overrides select_o;
  Overrides stability_o;
  Overrides synth_o;
  Overrides evaluate_o;
  CLI::App* select = app.add_subcommand("select", "cluster, pick representatives, refine");
  CLI::App* stability = app.add_subcommand("stability", "repeat selection over bootstrap resamples");
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset with ground truth");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score OLS and forest on a selection");
  add_shared_flags(select, select_o);
  add_shared_flags(stability, stability_o);
  add_shared_flags(synth, synth_o);
  add_synth_flags(synth, synth_o);
  add_shared_flags(evaluate, evaluate_o);
  evaluate->add_option("--selection", evaluate_o.selection_file, "selection JSON from select")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(TF_ERR_CONFIG, e.what());
  }

  try {
    tf_result* raw = nullptr;
    if (select->parsed()) {
      const ConfigPtr config = build_config(select_o);
      const DatasetPtr data = load_dataset(config.get());
      check(tf_select(config.get(), data.get(), &raw));
      return finish(ResultPtr(raw).get(), select_o);
    }
    if (stability->parsed()) {
      const ConfigPtr config = build_config(stability_o);
      const DatasetPtr data = load_dataset(config.get());
      check(tf_stability(config.get(), data.get(), &raw));
      return finish(ResultPtr(raw).get(), stability_o);
    }
    if (synth->parsed()) {
      const ConfigPtr config = build_config(synth_o);
      check(tf_synth(config.get(), &raw));
      return finish(ResultPtr(raw).get(), synth_o);
    }
    const ConfigPtr config = build_config(evaluate_o);
    const DatasetPtr data = load_dataset(config.get());
    const std::string selection = read_text(evaluate_o.selection_file);
    check(tf_evaluate(config.get(), data.get(), selection.c_str(), &raw));
    return finish(ResultPtr(raw).get(), evaluate_o);
  } catch (const CliError& e) {
    return fail(e.code, e.message);
  } catch (const std::exception& e) {
    return fail(TF_ERR_INTERNAL, e.what());
  }
}
