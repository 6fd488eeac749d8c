#pragma once

// Experiment configuration (JSON), dispatch, and on-disk artifacts.
//
// Exit codes: 0 success, 2 configuration error, 3 verification violations,
// 4 resource cap exceeded.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "osa/verifier.hpp"

namespace osa {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kResultsSchema = "osa.results/1";
inline constexpr const char* kVerifySchema = "osa.verify/1";
inline constexpr const char* kSweepSchema = "osa.sweep/1";
inline constexpr const char* kMetadataSchema = "osa.metadata/1";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitViolations = 3, kExitResourceCap = 4 };

enum class ExperimentKind { Solve, Simulate, Compare, Verify };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct VerifySettings {
  std::vector<std::string> checks{"optimality", "rotation", "swap_order", "reduction", "affinity", "negative_scan"};
  std::size_t optimality = 500;
  std::size_t swap = 10000;
  std::size_t reduction = 1000;
  std::size_t affinity = 10000;
  std::size_t negative_scan = 200;
  Range dp_n{2, 5};
  Range dp_T{1, 5};
  Range w_n{2, 8};
  Range w_T{1, 8};
  Range beta{0.0, 1.0};
  BeliefLaw belief_law = BeliefLaw::Mixed;
};

struct SweepGrid {
  std::vector<double> p01;
  std::vector<double> p11;
  std::vector<double> beta;
  std::vector<std::size_t> k;
  std::vector<int> T;
  bool empty() const { return p01.empty() && p11.empty() && beta.empty() && k.empty() && T.empty(); }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Solve;
  double p01 = 0.0;
  double p11 = 0.0;
  int T = 1;
  double beta = 1.0;
  std::size_t n = 0;
  std::size_t k = 1;
  std::vector<double> belief;  // empty: stationary preset
  bool stationary = false;
  std::vector<std::string> policies;
  std::vector<std::size_t> fixed_set;  // one-based
  std::size_t replications = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::size_t max_memo = 10'000'000;
  bool timing = true;
  bool traces = false;
  std::size_t trace_replications = 10;
  std::string out_dir = "results";
  VerifySettings verify;
  SweepGrid grid;

  /// Parses and validates; throws ConfigError.
  static ExperimentConfig parse(const std::string& json_text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical JSON echo; parse(to_json()) reproduces the config.
  std::string to_json() const;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> max_memo;
  std::optional<bool> traces;

  void apply(ExperimentConfig& cfg) const;
};

/// Initial belief for the config (explicit vector or all-stationary);
/// warns on `log` when the stationary point is undefined.
std::vector<double> initial_belief(double p01, double p11, std::size_t n, const ExperimentConfig& cfg,
                                   std::ostream& log);

/// "%.17g", or the empty string for non-finite values.
std::string format_number(double v);

/// Executes a config's experiment and writes artifacts; returns an ExitCode.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);
/// Parameter sweep over cfg.grid; returns an ExitCode.
int run_sweep(const ExperimentConfig& cfg, std::ostream& log);

/// CLI entry: load, override, dispatch, map errors to exit codes.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CliOverrides& overrides, std::ostream& log);

}  // namespace osa
