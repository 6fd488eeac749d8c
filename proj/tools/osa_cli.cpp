// Command-line front end: `osa run <config>` and `osa sweep <config>`.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "osa/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Opportunistic multi-channel access: exact DP, greedy policy, simulation and verification"};
  app.set_version_flag("--version", osa::kVersion);
  app.require_subcommand(1);

  osa::CliOverrides overrides;
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_dir;
  std::size_t max_memo = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Worker threads (0 = available parallelism)");
    sub->add_option("--out-dir", out_dir, "Directory for result artifacts");
    sub->add_option("--max-memo", max_memo, "Cap on memoized DP states");
    sub->add_flag("--traces", "Write line-delimited simulation traces");
  };
  auto* run = app.add_subcommand("run", "Run one experiment (solve, simulate, compare, verify)");
  auto* sweep = app.add_subcommand("sweep", "Solve over a parameter grid");
  add_common(run);
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : osa::kExitConfig;
  }

  CLI::App* chosen = run->parsed() ? run : sweep;
  if (chosen->count("--seed")) overrides.seed = seed;
  if (chosen->count("--threads")) overrides.threads = threads;
  if (chosen->count("--out-dir")) overrides.out_dir = out_dir;
  if (chosen->count("--max-memo")) overrides.max_memo = max_memo;
  if (chosen->count("--traces")) overrides.traces = true;

  return osa::run_command(chosen == run ? "run" : "sweep", config, overrides, std::cerr);
}
