#pragma once

// Randomized checks of the greedy-optimality statements against the exact
// solvers. Every instance is regenerated from (sampler seed, index), and every
// violation carries enough data to reproduce it.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "osa/belief.hpp"
#include "osa/dp.hpp"

namespace osa {

enum class Regime { Positive, Negative, Boundary, Any };
enum class BeliefLaw { Mixed, Uniform, Sorted, Reachable, BoundaryHeavy };

std::string to_string(Regime r);
std::string to_string(BeliefLaw b);
Regime parse_regime(const std::string& s);
BeliefLaw parse_belief_law(const std::string& s);

struct Instance {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::size_t n = 1;
  std::size_t k = 1;
  int T = 1;
  double beta = 1.0;
  double p01 = 0.0;
  double p11 = 0.0;
  std::vector<double> belief;
  std::string stratum;

  TransitionModel model() const { return {p01, p11}; }
  HorizonSpec horizon() const { return {T, beta}; }
};

struct InstanceSampler {
  std::size_t n_min = 2;
  std::size_t n_max = 5;
  std::size_t k_min = 1;
  std::size_t k_max = 0;  // 0: up to n
  int T_min = 1;
  int T_max = 5;
  double beta_min = 0.0;
  double beta_max = 1.0;
  Regime regime = Regime::Positive;
  BeliefLaw law = BeliefLaw::Mixed;
  std::uint64_t seed = 0;
  /// Force k = n (single-action instances).
  bool all_channels = false;

  /// Instance `index`; a pure function of (*this, index).
  Instance sample(std::size_t index) const;
  void validate() const;
};

struct ViolationReport {
  std::string property;
  Instance instance;
  std::string detail;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // amount by which the asserted relation fails
  double tolerance = 0.0;
};

struct PropertyTally {
  std::size_t assertions = 0;
  std::size_t violations = 0;
  double worst_gap = 0.0;
};

struct CheckResult {
  std::string check;
  std::size_t instances = 0;
  std::map<std::string, PropertyTally> properties;
  std::vector<ViolationReport> violations;
  std::vector<std::string> errors;  // per-instance solver failures

  bool passed() const noexcept { return violations.empty() && errors.empty(); }
  std::size_t assertions() const noexcept;
};

struct VerifyOptions {
  SolverOptions solver;
  unsigned threads = 1;  // 0: hardware concurrency
};

inline constexpr double kIdentityTolerance = 1e-12;

/// Greedy value equals the optimal value; the greedy first action is optimal;
/// every tie-equivalent greedy action is a DP maximizer at every state
/// reachable under greedy.
CheckResult check_greedy_optimality(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts = {});
/// 1 + W(w_2..w_n, w_1) >= W(w_1..w_n) on sorted beliefs, every t.
CheckResult check_rotation(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts = {});
/// W(.., y, x, ..) >= W(.., x, y, ..) for x >= y, sorted surroundings, every j and t.
CheckResult check_swap_order(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts = {});
/// W(complement ascending, a) <= W(sorted) for every first action a, every t.
CheckResult check_first_action_reduction(const InstanceSampler& sampler, std::size_t count,
                                   const VerifyOptions& opts = {});
/// Swap identity, three-point collinearity and outcome normalization.
CheckResult check_affinity(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts = {});
/// Greedy (exact policy evaluation) against the DP oracle; findings only.
CheckResult scan_negative_regime(const InstanceSampler& sampler, std::size_t count,
                                 const VerifyOptions& opts = {});

/// One JSON object per line.
void write_violations_jsonl(std::ostream& os, const std::vector<ViolationReport>& violations);
std::string violation_json(const ViolationReport& v);
/// Fixed-width table, one row per property.
void write_summary_table(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace osa
