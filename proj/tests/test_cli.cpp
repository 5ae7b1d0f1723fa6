#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mindex/cli.hpp"

using namespace mindex;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mindex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mindex_cli_tests" / name;
  fs::remove_all(p);
  return p;
}

Json load(const fs::path& p) {
  std::ifstream f(p);
  return Json::parse(f);
}

const std::vector<std::string> kSmallTrain{"--set", "d=12", "--set", "n=300", "--set", "n_test=500",
                                           "--set", "T2=200", "--set", "spectral.n_mc=20000"};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("train writes a complete report") {
    const fs::path dir = scratch("train");
    std::vector<std::string> args{"train", "--seed", "5", "--out", dir.string()};
    args.insert(args.end(), kSmallTrain.begin(), kSmallTrain.end());
    const Run r = run(args);
    REQUIRE(r.code == 0);
    const Json doc = load(dir / "train_report.json");
    CHECK(doc["schema_version"] == kSchemaVersion);
    CHECK(doc["seed"] == 5);
    CHECK(doc["effective_config"]["d"] == 12);
    CHECK(doc["config_hash"].get<std::string>().size() == 16);
    const Json& res = doc["results"];
    for (const char* key : {"cos_best", "coverage_min", "per_direction", "principal_angles", "test_mse",
                            "test_mse_stderr", "null_mse", "eigenvalues", "r_hat", "kappa_hat", "warnings"}) {
      CHECK_MESSAGE(res.contains(key), key);
    }
    CHECK(res["test_mse"].get<double>() >= 0.0);
    CHECK_FALSE(doc.dump().find("wall") != std::string::npos);
  }

  TEST_CASE("rerunning from a report reproduces the results bit for bit") {
    const fs::path first = scratch("rerun_a");
    std::vector<std::string> args{"train", "--seed", "9", "--out", first.string()};
    args.insert(args.end(), kSmallTrain.begin(), kSmallTrain.end());
    REQUIRE(run(args).code == 0);
    const fs::path second = scratch("rerun_b");
    fs::create_directories(second);
    fs::copy_file(first / "train_report.json", second / "input.json");
    REQUIRE(run({"train", "--config", (second / "input.json").string(), "--out", second.string()}).code == 0);
    const Json a = load(first / "train_report.json");
    const Json b = load(second / "train_report.json");
    CHECK(a["results"].dump() == b["results"].dump());
    Json ca = a["effective_config"], cb = b["effective_config"];
    ca.erase("output_dir");
    cb.erase("output_dir");
    CHECK(ca == cb);
  }

  TEST_CASE("adam mode trains too") {
    const fs::path dir = scratch("adam");
    std::vector<std::string> args{"train", "--out", dir.string(), "--set", "mode=adam", "--set", "adam.epochs=3"};
    args.insert(args.end(), kSmallTrain.begin(), kSmallTrain.end());
    REQUIRE(run(args).code == 0);
    CHECK(load(dir / "train_report.json")["results"]["epoch_losses"].size() == 3);
  }

  TEST_CASE("verify-approx reports every degree within tolerance") {
    const fs::path dir = scratch("approx");
    const Run r = run({"verify-approx", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const Json doc = load(dir / "verify_approx.json");
    const Json& rows = doc["results"]["rows"];
    REQUIRE(rows.size() == 7);
    for (const auto& row : rows) CHECK(row["max_error"].get<double>() <= 1e-8);
    CHECK(doc["results"]["all_within_1e-8"] == true);
    CHECK(r.out.find("max_error") != std::string::npos);
  }

  TEST_CASE("spectral report") {
    const fs::path dir = scratch("spectral");
    const Run r = run({"spectral", "--out", dir.string(), "--set", "d=10", "--set", "n=2000", "--set",
                       "spectral.n_mc=50000"});
    REQUIRE(r.code == 0);
    const Json res = load(dir / "spectral_report.json")["results"];
    CHECK(res["r_hat"] == 2);
    CHECK(res["eigenvalues"].size() == 10);
    CHECK(res["noise_norm"].get<double>() > 0.0);
  }

  TEST_CASE("experiment subcommands write CSVs with manifests") {
    const fs::path dir = scratch("experiments");
    const std::string out = dir.string();
    REQUIRE(run({"noise-scaling", "--out", out, "--set", "noise.d=8", "--set", "noise.n_grid=[64, 128]", "--set",
                 "noise.seeds=2", "--set", "noise.n_mc=20000"})
                .code == 0);
    REQUIRE(run({"power-check", "--out", out, "--set", "power.d=8", "--set", "power.n=128", "--set",
                 "power.n_mc=20000"})
                .code == 0);
    REQUIRE(run({"sweep-alpha", "--out", out, "--set", "sweep.d_list=[8]", "--set", "sweep.seeds=1", "--set",
                 "sweep.alpha_min=1.5", "--set", "sweep.alpha_max=1.5", "--set", "adam.epochs=2", "--set",
                 "n_test=100"})
                .code == 0);
    REQUIRE(run({"loss-compare", "--out", out, "--set", "phase.d_list=[8]", "--set", "phase.ratios=[5]", "--set",
                 "phase.seeds=2", "--set", "adam.epochs=2"})
                .code == 0);
    for (const char* f : {"noise.csv", "noise_manifest.json", "power.csv", "power_manifest.json", "fig1.csv",
                          "fig1_agg.csv", "fig1_manifest.json", "fig2.csv", "fig2_agg.csv", "fig2_manifest.json"}) {
      CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    CHECK(load(dir / "fig2_manifest.json")["schema_version"] == kSchemaVersion);
  }

  TEST_CASE("errors give nonzero exit codes") {
    CHECK(run({"frobnicate"}).code != 0);
    CHECK(run({}).code != 0);
    const Run bad = run({"train", "--set", "eta1=-1"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("eta1") != std::string::npos);
    CHECK(run({"train", "--set", "novalue"}).code == 2);
    CHECK(run({"train", "--config", "/nonexistent.toml"}).code == 2);
    std::ostringstream out, err;
    CHECK(dispatch("frobnicate", RunConfig(), out, err) == 2);
  }
}
