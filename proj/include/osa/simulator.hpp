#pragma once

// Seeded Monte Carlo simulation of the hidden channels under a policy.
//
// Replication r draws nature (initial states and transitions) from stream
// (seed, r, 0) and gives the policy stream (seed, r, 1). Every channel's
// transition is drawn every step whether or not it is sensed, so two policies
// run on the same (seed, r) face the same hidden sample path.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "osa/belief.hpp"
#include "osa/policy.hpp"

namespace osa {

struct SimConfig {
  TransitionModel model{0.0, 0.0};
  HorizonSpec horizon;
  std::size_t k = 1;
  BeliefVector initial_belief{std::vector<double>{0.5}};
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  /// Replications whose full trace is kept (the first ones, in order).
  std::size_t trace_replications = 0;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 1;

  std::size_t n() const noexcept { return initial_belief.size(); }
  void validate() const;
};

struct StepRecord {
  int t = 0;
  std::vector<std::uint8_t> hidden;  // states of all n channels at t
  ActionSet action;
  std::vector<std::uint8_t> observation;  // aligned with action
  int reward = 0;                          // good channels sensed
  double discounted_cumulative = 0.0;
};

struct RunRecord {
  std::size_t replication = 0;
  std::vector<StepRecord> steps;
  double total = 0.0;
};

struct SimSummary {
  std::size_t replications = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance; 0 for one replication
  double standard_error = 0.0;
  std::vector<double> totals;   // per replication, index order
  std::vector<RunRecord> traces;
};

struct PairedSummary {
  SimSummary a;
  SimSummary b;
  /// Statistics of total_a - total_b per replication.
  SimSummary difference;
};

/// One replication; `policy` is reset with the replication's policy stream.
RunRecord simulate_replication(const SimConfig& config, Policy& policy, std::size_t replication,
                               bool keep_steps);

SimSummary simulate(const SimConfig& config, const Policy& policy);

/// Runs both policies on identical hidden sample paths.
PairedSummary common_random_numbers_compare(const SimConfig& config, const Policy& a, const Policy& b);

/// Mean, variance and standard error of `values` (Kahan summation, index order).
SimSummary summarize(std::vector<double> values);

inline constexpr const char* kTraceSchema = "osa.trace/1";

/// Line-delimited JSON: a header record, then one record per step.
void write_traces(std::ostream& os, const std::vector<RunRecord>& runs, const std::string& policy);

}  // namespace osa
