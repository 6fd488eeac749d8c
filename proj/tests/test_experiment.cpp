#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "osa/dp.hpp"
#include "osa/errors.hpp"
#include "osa/experiment.hpp"

namespace fs = std::filesystem;
using namespace osa;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "osa_experiment_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Rows of a headed CSV as column -> field maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (std::getline(in, line)) header = split(line);
  while (std::getline(in, line)) {
    const auto fields = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) row[header[i]] = fields[i];
    rows.push_back(row);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OSA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string hand_config(const fs::path& out, const std::string& extra = "") {
  return R"({"kind":"solve","model":{"p01":0.2,"p11":0.8},"horizon":{"T":2,"beta":1},)"
         R"("n":2,"k":1,"belief":[0.5,0.5],"out_dir":")" +
         out.string() + "\"" + extra + "}";
}

}  // namespace

TEST_CASE("config parsing is strict") {
  const auto ok = ExperimentConfig::parse(hand_config("o"));
  CHECK(ok.kind == ExperimentKind::Solve);
  CHECK(ok.policies == std::vector<std::string>{"optimal", "greedy"});
  CHECK(ok.belief == std::vector<double>{0.5, 0.5});

  CHECK_THROWS_AS(ExperimentConfig::parse(hand_config("o", R"(,"colour":1)")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("{not json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"solve"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"hover"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(hand_config("o", R"(,"k":3)")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"solve","model":{"p01":1.2,"p11":0.8},"horizon":{"T":2,"beta":1},"n":1,"k":1,"belief":[0.5]})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"solve","model":{"p01":0.2,"p11":0.8},"horizon":{"T":2,"beta":1},"n":2,"k":1,"belief":[0.5]})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(hand_config("o", R"(,"policies":["random"])")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"compare","model":{"p01":0.2,"p11":0.8},"horizon":{"T":2,"beta":1},"n":2,"k":1,"belief":[0.5,0.5],"policies":["greedy"]})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"verify","model":{"p01":0.2,"p11":0.8}})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse(R"({"kind":"verify","verify":{"checks":["everything"]}})"), ConfigError);
}

TEST_CASE("config echo round-trips") {
  const auto cfg = ExperimentConfig::parse(
      R"({"kind":"simulate","model":{"p01":0.1,"p11":0.9},"horizon":{"T":4,"beta":0.95},"n":4,"k":2,)"
      R"("belief":"stationary","policies":["greedy","fixed"],"fixed_set":[1,3],"replications":500,"seed":9,"grid":{"k":[1,2]}})");
  const auto again = ExperimentConfig::parse(cfg.to_json());
  CHECK(again.to_json() == cfg.to_json());
  CHECK(again.stationary);
  CHECK(again.fixed_set == std::vector<std::size_t>{1, 3});
  const auto v = ExperimentConfig::parse(R"({"kind":"verify","verify":{"counts":{"swap":7}}})");
  CHECK(ExperimentConfig::parse(v.to_json()).verify.swap == 7);
}

TEST_CASE("stationary preset and its fallback") {
  auto cfg = ExperimentConfig::parse(
      R"({"kind":"solve","model":{"p01":0.2,"p11":0.6},"horizon":{"T":2,"beta":1},"n":3,"k":1,"belief":"stationary"})");
  std::ostringstream log;
  const auto b = initial_belief(0.2, 0.6, 3, cfg, log);
  REQUIRE(b.size() == 3);
  CHECK(std::abs(b[0] - 0.2 / 0.6) < 1e-15);
  CHECK(log.str().empty());
  const auto fallback = initial_belief(0.0, 1.0, 3, cfg, log);
  CHECK(fallback == std::vector<double>{0.5, 0.5, 0.5});
  CHECK_FALSE(log.str().empty());
}

TEST_CASE("solve writes the hand-instance value") {
  const auto dir = scratch("solve");
  const auto cfgp = write_config(dir, hand_config(dir / "out"));
  std::ostringstream log;
  REQUIRE(run_command("run", cfgp, {}, log) == kExitOk);
  const auto rows = read_csv(dir / "out" / "results.csv");
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(std::abs(std::stod(r.at("analytic_value")) - 1.15) < 1e-9);
  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "metadata.json"));
  CHECK(meta["schema"] == kMetadataSchema);
  CHECK(meta["table_schema"] == kResultsSchema);
  CHECK(meta["version"] == kVersion);
  CHECK(meta["seed"] == 0);
}

TEST_CASE("malformed config exits 2 and writes nothing") {
  const auto dir = scratch("malformed");
  const auto out = dir / "out";
  const auto cfgp = write_config(dir, hand_config(out, R"(,"n":"three")"));
  std::ostringstream log;
  CHECK(run_command("run", cfgp, {}, log) == kExitConfig);
  CHECK_FALSE(fs::exists(out));
  CHECK(run_cli("run " + cfgp.string()) == kExitConfig);
  CHECK(run_cli("run " + (dir / "missing.json").string()) == kExitConfig);
  CHECK(run_cli("frobnicate") == kExitConfig);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("tiny memo cap exits 4") {
  const auto dir = scratch("memo");
  const auto cfgp = write_config(
      dir, R"({"kind":"solve","model":{"p01":0.2,"p11":0.8},"horizon":{"T":4,"beta":1},"n":4,"k":2,)"
           R"("belief":[0.1,0.3,0.5,0.7],"policies":["optimal"],"out_dir":")" +
               (dir / "out").string() + "\"}");
  CHECK(run_cli("run " + cfgp.string() + " --max-memo 3") == kExitResourceCap);
  CHECK(run_cli("run " + cfgp.string()) == kExitOk);
}

TEST_CASE("simulate and compare artifacts") {
  const auto dir = scratch("simulate");
  const auto cfgp = write_config(
      dir, R"({"kind":"simulate","model":{"p01":0.2,"p11":0.8},"horizon":{"T":3,"beta":0.9},"n":3,"k":1,)"
           R"("belief":[0.3,0.5,0.7],"replications":20000,"seed":3,"threads":2,"traces":true,"trace_replications":2,"out_dir":")" +
               (dir / "out").string() + "\"}");
  std::ostringstream log;
  REQUIRE(run_command("run", cfgp, {}, log) == kExitOk);
  const auto rows = read_csv(dir / "out" / "results.csv");
  REQUIRE(rows.size() == 1);
  const double analytic = std::stod(rows[0].at("analytic_value"));
  const double mean = std::stod(rows[0].at("simulated_mean"));
  const double se = std::stod(rows[0].at("std_error"));
  CHECK(std::abs(analytic - mean) <= 4 * se);

  std::ifstream traces(dir / "out" / "traces.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(traces, line)) {
    CHECK_FALSE(nlohmann::json::parse(line, nullptr, false).is_discarded());
    ++lines;
  }
  CHECK(lines == 1 + 2 * 3);

  const auto cdir = scratch("compare");
  const auto ccfg = write_config(
      cdir, R"({"kind":"compare","model":{"p01":0.2,"p11":0.8},"horizon":{"T":3,"beta":0.9},"n":3,"k":1,)"
            R"("belief":[0.3,0.5,0.7],"replications":5000,"seed":3,"policies":["greedy","round-robin"],"out_dir":")" +
                (cdir / "out").string() + "\"}");
  REQUIRE(run_command("run", ccfg, {}, log) == kExitOk);
  CHECK(read_csv(cdir / "out" / "results.csv").size() == 3);
}

TEST_CASE("small verify run is clean") {
  const auto dir = scratch("verify");
  const auto cfgp = write_config(
      dir, R"({"kind":"verify","seed":4,"threads":1,"verify":{"counts":{"optimality":20,"swap":100,"reduction":30,"affinity":100,"negative_scan":10}},"out_dir":")" +
               (dir / "out").string() + "\"}");
  std::ostringstream log;
  CHECK(run_command("run", cfgp, {}, log) == kExitOk);
  CHECK(slurp(dir / "out" / "violations.jsonl").empty());
  CHECK(fs::exists(dir / "out" / "summary.txt"));
  const auto rows = read_csv(dir / "out" / "results.csv");
  CHECK(rows.size() >= 6);
  for (const auto& r : rows) CHECK(r.at("violations") == "0");
}

TEST_CASE("sweep rows") {
  const auto dir = scratch("sweep");
  // a one-point sweep agrees with solve
  const auto one = write_config(
      dir, R"({"kind":"solve","model":{"p01":0.2,"p11":0.8},"horizon":{"T":2,"beta":1},"n":2,"k":1,)"
           R"("belief":[0.5,0.5],"grid":{"k":[1]},"out_dir":")" +
               (dir / "one").string() + "\"}");
  std::ostringstream log;
  REQUIRE(run_command("sweep", one, {}, log) == kExitOk);
  auto rows = read_csv(dir / "one" / "results.csv");
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(std::stod(rows[0].at("optimal_value")) - 1.15) < 1e-9);
  CHECK(rows[0].at("regime") == "positive");
  CHECK(rows[0].at("negative_scan") == "n/a");

  // positive regime: zero gap at every point
  const auto many = write_config(
      dir, R"({"kind":"solve","model":{"p01":0.2,"p11":0.8},"horizon":{"T":3,"beta":0.9},"n":4,"k":1,)"
           R"("belief":[0.1,0.4,0.6,0.9],"grid":{"k":[1,2,3,4],"beta":[0,0.5,1]},"out_dir":")" +
               (dir / "many").string() + "\"}");
  REQUIRE(run_command("sweep", many, {}, log) == kExitOk);
  rows = read_csv(dir / "many" / "results.csv");
  REQUIRE(rows.size() == 12);
  const std::vector<double> w{0.1, 0.4, 0.6, 0.9};
  for (const auto& r : rows) {
    CHECK(std::abs(std::stod(r.at("gap"))) <= 1e-9);
    if (std::stod(r.at("beta")) == 0.0) {
      // only the first step counts: the k largest entries
      const auto k = std::stoul(r.at("k"));
      double top = 0.0;
      for (std::size_t i = 0; i < k; ++i) top += w[w.size() - 1 - i];
      CHECK(std::abs(std::stod(r.at("greedy_value")) - top) < 1e-12);
    }
  }

  // negative-regime points are tagged
  const auto neg = write_config(
      dir, R"({"kind":"solve","model":{"p01":0.8,"p11":0.2},"horizon":{"T":3,"beta":1},"n":3,"k":1,)"
           R"("belief":[0.2,0.5,0.6],"grid":{"T":[1,3]},"out_dir":")" +
               (dir / "neg").string() + "\"}");
  REQUIRE(run_command("sweep", neg, {}, log) == kExitOk);
  rows = read_csv(dir / "neg" / "results.csv");
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.at("regime") == "negative");
    CHECK(r.at("negative_scan") != "n/a");
  }
}

TEST_CASE("artifacts are byte-identical with timing off") {
  const auto dir = scratch("bytes");
  auto cfg_for = [&](const std::string& out) {
    return write_config(dir / out,
                        R"({"kind":"simulate","model":{"p01":0.3,"p11":0.7},"horizon":{"T":3,"beta":0.9},"n":3,"k":2,)"
                        R"("belief":[0.2,0.5,0.8],"replications":3000,"seed":11,"traces":true,"timing":false,"out_dir":")" +
                            (dir / "out").string() + "\"}");
  };
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  std::ostringstream log;
  REQUIRE(run_command("run", cfg_for("a"), {}, log) == kExitOk);
  const auto first_csv = slurp(dir / "out" / "results.csv");
  const auto first_traces = slurp(dir / "out" / "traces.jsonl");
  const auto first_meta = slurp(dir / "out" / "metadata.json");
  CliOverrides threads;
  threads.threads = 3;
  REQUIRE(run_command("run", cfg_for("b"), threads, log) == kExitOk);
  CHECK(slurp(dir / "out" / "results.csv") == first_csv);
  CHECK(slurp(dir / "out" / "traces.jsonl") == first_traces);
  // the echoed config records the thread count, so compare everything else
  auto a = nlohmann::json::parse(first_meta), b = nlohmann::json::parse(slurp(dir / "out" / "metadata.json"));
  a["config"].erase("threads");
  b["config"].erase("threads");
  a.erase("command");
  b.erase("command");
  CHECK(a == b);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(std::nan("")) == "");
}
