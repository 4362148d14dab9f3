#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "slapred/experiment.hpp"

using namespace slapred;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("slapred-exp-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

json base_config() {
  return json::parse(R"({
    "seed": 3,
    "traces": [
      {"name": "p1", "pattern": "periodic", "profile": "A", "duration": "30m"},
      {"name": "p2", "pattern": "periodic", "profile": "B", "duration": "30m"},
      {"name": "f1", "pattern": "flashcrowd", "profile": "A", "duration": "30m"}
    ],
    "methods": []
  })");
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(SLAPRED_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config errors") {
  const auto dir = scratch_dir("errors");
  auto j = base_config();
  SUBCASE("empty method list writes nothing") {
    const auto c = ExperimentConfig::from_json(j);
    CHECK_THROWS_AS(run_experiment(c, {dir / "out", 1, 1}), ConfigError);
    CHECK_FALSE(fs::exists(dir / "out"));
  }
  SUBCASE("unknown method") {
    j["methods"] = json::parse(R"([{"name": "svm", "protocol": "holdout", "traces": ["p1"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("unknown protocol") {
    j["methods"] = json::parse(R"([{"name": "cart", "protocol": "kfold", "traces": ["p1"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("online method outside prequential") {
    j["methods"] = json::parse(R"([{"name": "oaue", "protocol": "holdout", "traces": ["p1"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("offline method under prequential") {
    j["methods"] = json::parse(R"([{"name": "cart", "protocol": "prequential", "traces": ["p1"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("unknown trace") {
    j["methods"] = json::parse(R"([{"name": "cart", "protocol": "holdout", "traces": ["nope"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("unknown parameter") {
    j["methods"] = json::parse(R"([{"name": "cart", "protocol": "holdout", "traces": ["p1"], "params": {"depth": 3}}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("concat of an undeclared trace") {
    j["traces"].push_back(json::parse(R"({"name": "x", "concat": ["p1", "zz"]})"));
    j["methods"] = json::parse(R"([{"name": "oaue", "protocol": "prequential", "traces": ["x"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
  SUBCASE("unknown profile") {
    j["traces"][0]["profile"] = "Q";
    j["methods"] = json::parse(R"([{"name": "cart", "protocol": "holdout", "traces": ["p1"]}])");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j).validate(), ConfigError);
  }
}

TEST_CASE("config JSON round trip") {
  const auto c = paper_suite_config(4, true);
  CHECK_NOTHROW(c.validate());
  const auto again = ExperimentConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("holdout matrix produces one row per trace") {
  const auto dir = scratch_dir("holdout");
  auto j = base_config();
  j["methods"] = json::parse(
      R"([{"name": "random_forest", "protocol": "holdout", "traces": ["p1", "p2", "f1"], "params": {"trees": 20}}])");
  const auto outcome = run_experiment(ExperimentConfig::from_json(j), {dir, 1, 1});
  REQUIRE(outcome.ok());
  CHECK(outcome.runs.size() == 3);

  const auto rows = read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].front() == "run_id");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][1] == "random_forest");
    CHECK(rows[i][2] == "holdout");
    CHECK(std::stoul(rows[i][5]) == 540);  // 30% of 1800
  }
  const auto table = slurp(dir / "metrics.txt");
  CHECK(table.find("Offline learning, in-trace holdout") != std::string::npos);
  for (const char* t : {"p1", "p2", "f1"}) {
    CHECK(table.find(t) != std::string::npos);
    CHECK(fs::exists(dir / "traces" / (std::string(t) + ".csv")));
  }
}

TEST_CASE("online run on a concatenated trace") {
  const auto dir = scratch_dir("concat");
  auto j = base_config();
  j["traces"].push_back(json::parse(R"({"name": "p1+p2", "concat": ["p1", "p2"]})"));
  j["methods"] = json::parse(R"([
    {"name": "oaue", "protocol": "prequential", "traces": ["p1+p2"], "params": {"block_size": 200}},
    {"name": "random_forest", "protocol": "cross_trace", "pairs": [["p1", "p2"]], "params": {"trees": 10}}
  ])");
  const auto outcome = run_experiment(ExperimentConfig::from_json(j), {dir, 0, 10});
  REQUIRE(outcome.ok());

  const auto meta = json::parse(slurp(dir / "run-metadata.json"));
  CHECK(meta["seed"] == 3);
  CHECK(meta["stride"] == 10);
  CHECK(meta["traces"]["p1+p2"]["boundaries"] == json::array({1800}));
  const auto& runs = meta["runs"];
  REQUIRE(runs.size() == 2);
  const auto& oaue = runs[0];
  CHECK(oaue["id"] == "oaue.prequential.p1+p2");
  CHECK(oaue["boundaries"] == json::array({1800 - 500 + 1}));
  CHECK(runs[1]["id"] == "random_forest.cross_trace.p1__p2");
  CHECK(runs[1]["boundaries"] == json::array());

  const auto series = read_csv(dir / oaue["series"].get<std::string>());
  CHECK(series[0] == std::vector<std::string>{"index", "cumulative", "win_5000", "win_1000"});
  CHECK(series[1][0] == "10");
  CHECK(series.back()[0] == "3100");

  // the concatenated trace file reads back with its segments
  const auto t = read_trace(dir / "traces" / "p1+p2.csv");
  CHECK(t.rows.size() == 3600);
  CHECK(t.metadata.boundaries() == std::vector<std::size_t>{1800});
}

TEST_CASE("metric columns are consistent") {
  const auto dir = scratch_dir("consistent");
  auto j = base_config();
  j["methods"] = json::parse(R"([
    {"name": "cart", "protocol": "holdout", "traces": ["p1", "f1"]},
    {"name": "hoeffding_tree", "protocol": "prequential", "traces": ["p2"]},
    {"name": "sgd_logistic", "protocol": "prequential", "traces": ["p1"]}
  ])");
  REQUIRE(run_experiment(ExperimentConfig::from_json(j), {dir, 1, 1}).ok());
  const auto rows = read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 5);
  const auto& h = rows[0];
  const auto col = [&](const char* name) { return std::find(h.begin(), h.end(), name) - h.begin(); };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double tp = std::stod(r[col("tp")]), fp = std::stod(r[col("fp")]);
    const double tn = std::stod(r[col("tn")]), fn = std::stod(r[col("fn")]);
    CHECK(tp + fp + tn + fn == std::stod(r[col("samples")]));
    CHECK(std::stod(r[col("ca")]) == doctest::Approx((tp + tn) / (tp + fp + tn + fn)).epsilon(1e-5));
    if (r[col("ba")] == "undefined") continue;
    const double ba = std::stod(r[col("ba")]);
    CHECK(ba == doctest::Approx((std::stod(r[col("tpr")]) + std::stod(r[col("tnr")])) / 2).epsilon(1e-5));
    CHECK(std::stod(r[col("far_fpr")]) == doctest::Approx(fp / (fp + tn)).epsilon(1e-5));
    CHECK(std::stod(r[col("far_as_printed")]) == doctest::Approx(fn / (fn + tp)).epsilon(1e-5));
  }
}

TEST_CASE("a failing run keeps the other results") {
  const auto dir = scratch_dir("partial");
  const std::vector<int> idle(900, 0);
  write_trace(synthesize_trace(idle, builtin_profile("A"), 1), dir / "calm.csv");

  auto j = base_config();
  j["traces"].push_back({{"name", "calm"}, {"file", "calm.csv"}});
  j["methods"] = json::parse(R"([{"name": "cart", "protocol": "holdout", "traces": ["p1", "calm"]}])");
  const auto outcome = run_experiment(ExperimentConfig::from_json(j, dir), {dir / "out", 1, 1});
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.failed_runs() == std::vector<std::string>{"cart.holdout.calm"});
  const auto rows = read_csv(dir / "out" / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "cart.holdout.p1");
  const auto meta = json::parse(slurp(dir / "out" / "run-metadata.json"));
  CHECK(meta["runs"][1]["status"] == "failed");
  CHECK(meta["runs"][1]["error"] == "degenerate training set");
}

TEST_CASE("command line") {
  const auto dir = scratch_dir("cli");
  const auto gen = [&](const fs::path& out) {
    return run_cli("generate --pattern flashcrowd --seed 42 --duration 20m --profile B --out " + out.string());
  };
  REQUIRE(gen(dir / "a") == 0);
  REQUIRE(gen(dir / "b") == 0);
  const auto name = fs::path("flashcrowd-B-seed42.csv");
  CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  CHECK(slurp(dir / "a" / metadata_path(name)) == slurp(dir / "b" / metadata_path(name)));
  CHECK(read_trace(dir / "a" / name).rows.size() == 1200);

  CHECK(run_cli("generate --pattern square --out " + dir.string()) != 0);
  CHECK(run_cli("generate --duration 4x --out " + dir.string()) == 1);

  std::ofstream(dir / "empty.json") << base_config().dump();
  CHECK(run_cli("run --config " + (dir / "empty.json").string() + " --out " + (dir / "r").string()) == 2);
  CHECK_FALSE(fs::exists(dir / "r"));
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run_cli("run --config " + (dir / "broken.json").string()) == 2);
  CHECK(run_cli("bogus") != 0);
}
