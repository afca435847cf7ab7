#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tangled/ingest.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "tangled_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(TANGLED_CLI_PATH) + " " + args + " >" +
                          (kRoot / "stdout.txt").string() + " 2>" + (kRoot / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& text) {
  auto doc = nlohmann::ordered_json::parse(text);
  doc.erase("generated_at");
  return doc.dump();
}

// Synthetic data shared by the tests below, generated once.
fs::path synth_dir() {
  static const fs::path dir = [] {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const fs::path d = kRoot / "data";
    REQUIRE(run("synth --seed 3 --out " + d.string()) == 0);
    return d;
  }();
  return dir;
}

std::string data_flags() {
  return "--features " + (synth_dir() / "features.csv").string() + " --angles " +
         (synth_dir() / "angles.csv").string();
}

}  // namespace

TEST_CASE("synth writes parseable files deterministically") {
  const fs::path d = synth_dir();
  const auto data = tangled::load_csv(d / "features.csv", d / "angles.csv", tangled::AngleUnit::kRadians);
  CHECK(data.features.cols() == 30);
  CHECK(data.features.rows() == 2000);
  const auto truth = nlohmann::json::parse(slurp(d / "ground_truth.json"));
  CHECK(truth["drivers"].size() == 5);

  const fs::path again = kRoot / "again";
  REQUIRE(run("synth --seed 3 --out " + again.string()) == 0);
  CHECK(slurp(again / "features.csv") == slurp(d / "features.csv"));
  CHECK(slurp(again / "angles.csv") == slurp(d / "angles.csv"));
  CHECK(without_timestamp(slurp(again / "ground_truth.json")) ==
        without_timestamp(slurp(d / "ground_truth.json")));

  const fs::path other = kRoot / "other";
  REQUIRE(run("synth --seed 4 --out " + other.string()) == 0);
  CHECK(slurp(other / "features.csv") != slurp(d / "features.csv"));
}

TEST_CASE("select succeeds and writes a selection per angle") {
  const fs::path out = kRoot / "select";
  REQUIRE(run("select " + data_flags() + " --runs 5 --trees 20 --out " + out.string()) == 0);
  for (const char* angle : {"phi", "psi"}) {
    const auto doc = nlohmann::json::parse(slurp(out / (std::string("selection_") + angle + ".json")));
    CHECK(doc["kind"] == "selection");
    CHECK(doc["angle"] == angle);
    CHECK(doc["run_config"]["seed"] == 0);
    CHECK(doc["selected_indices"].size() >= 1);
    CHECK(doc["selected_indices"].size() == doc["selected"].size());
  }
  CHECK(slurp(kRoot / "stdout.txt").find("selected") != std::string::npos);
}

TEST_CASE("exit codes and error lines") {
  CHECK(run("select --features " + (synth_dir() / "features.csv").string() +
            " --angles /nonexistent/angles.csv --out " + (kRoot / "x").string()) == 2);
  const std::string err = slurp(kRoot / "stderr.txt");
  CHECK(err.rfind("tangled: error code=2 kind=data message=\"", 0) == 0);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
  CHECK(run("select " + data_flags() + " --tau 1.5 --out " + (kRoot / "x").string()) == 1);
  CHECK(slurp(kRoot / "stderr.txt").find("kind=config") != std::string::npos);
  CHECK(run("stability " + data_flags() + " --repeats 1 --out " + (kRoot / "x").string()) == 1);
  CHECK(run("select --no-such-flag") == 1);
  CHECK(run("select " + data_flags() + " --runs abc") == 1);
  // Nothing was written by the failed runs.
  CHECK_FALSE(fs::exists(kRoot / "x" / "selection_phi.json"));
}

TEST_CASE("config file with flag override") {
  const fs::path cfg = kRoot / "run.cfg";
  std::ofstream(cfg) << "# quick\nruns = 3\ntrees = 10\ntau = 1.5\nangle = psi\n";
  const fs::path out = kRoot / "cfg";
  CHECK(run("select --config " + cfg.string() + " " + data_flags() + " --out " + out.string()) == 1);
  REQUIRE(run("select --config " + cfg.string() + " --tau 0.8 " + data_flags() + " --out " +
              out.string()) == 0);
  CHECK(fs::exists(out / "selection_psi.json"));
  CHECK_FALSE(fs::exists(out / "selection_phi.json"));
  const auto doc = nlohmann::json::parse(slurp(out / "selection_psi.json"));
  CHECK(doc["run_config"]["runs"] == 3);
  CHECK(doc["run_config"]["tau"] == 0.8);
}

TEST_CASE("evaluate reports both predictors") {
  const fs::path sel_dir = kRoot / "evalsel";
  REQUIRE(run("select " + data_flags() + " --angle phi --runs 5 --trees 30 --out " +
              sel_dir.string()) == 0);
  const fs::path out = kRoot / "eval";
  REQUIRE(run("evaluate " + data_flags() + " --selection " + (sel_dir / "selection_phi.json").string() +
              " --out " + out.string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(out / "accuracy_phi.json"));
  CHECK(doc["accuracy"].contains("ols"));
  CHECK(doc["accuracy"].contains("forest"));

  // A hand-written selection of the true drivers.
  const auto truth = nlohmann::json::parse(slurp(synth_dir() / "ground_truth.json"));
  nlohmann::json drivers = nlohmann::json::object();
  drivers["kind"] = "selection";
  drivers["angle"] = "phi";
  drivers["selected_indices"] = truth["phi_drivers"];
  nlohmann::json names = nlohmann::json::array();
  for (const auto& j : truth["phi_drivers"]) names.push_back(truth["feature_names"][j.get<std::size_t>()]);
  drivers["selected_names"] = names;
  std::ofstream(kRoot / "drivers.json") << drivers.dump();
  REQUIRE(run("evaluate " + data_flags() + " --selection " + (kRoot / "drivers.json").string() +
              " --out " + out.string()) == 0);
  const auto acc = nlohmann::json::parse(slurp(out / "accuracy_phi.json"));
  CHECK(acc["accuracy"]["forest"]["r2_components"].get<double>() >= 0.8);

  std::ofstream(kRoot / "empty.json") << "";
  CHECK(run("evaluate " + data_flags() + " --selection " + (kRoot / "empty.json").string() +
            " --out " + out.string()) == 2);
  CHECK(run("evaluate " + data_flags() + " --selection /nonexistent.json --out " + out.string()) ==
        2);
}

TEST_CASE("stability smoke run is quick and reproducible") {
  const fs::path a = kRoot / "stab_a";
  const fs::path b = kRoot / "stab_b";
  const auto start = std::chrono::steady_clock::now();
  REQUIRE(run("stability " + data_flags() + " --repeats 2 --out " + a.string()) == 0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("stability smoke run took " << seconds << " s");
  CHECK(seconds < 60.0);
  for (const char* f : {"stability_phi.json", "stability_psi.json", "kuncheva_phi.csv",
                        "kuncheva_psi.csv"}) {
    CHECK(fs::exists(a / f));
  }
  REQUIRE(run("stability " + data_flags() + " --repeats 2 --angle phi --runs 4 --trees 20 --out " +
              b.string()) == 0);
  const std::string first = slurp(b / "stability_phi.json");
  REQUIRE(run("stability " + data_flags() + " --repeats 2 --angle phi --runs 4 --trees 20 --out " +
              b.string()) == 0);
  CHECK(without_timestamp(first) == without_timestamp(slurp(b / "stability_phi.json")));
  const auto doc = nlohmann::json::parse(first);
  CHECK(doc["runs"].size() == 2);
  CHECK(doc["kuncheva"].size() == 15);
  CHECK(doc["spearman"].contains("mean"));
}
