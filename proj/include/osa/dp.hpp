#pragma once

// Exact finite-horizon solvers.
//
// OptimalSolver evaluates the optimal value function V_t by full enumeration of
// the C(n,k) actions and the 2^k sensing outcomes per step. GreedyValueSolver
// evaluates the order-sensitive recursion W_t: sense the last k entries of the
// argument list, then continue on the list
//   (p01 repeated #bad, tau of the unsensed entries in order, p11 repeated #good).
// On an ascending list with p11 >= p01 this is the value of the greedy policy;
// on an arbitrary list it is the value of the ordered-list policy started from
// that list.
//
// Time is 1-based: t ranges over 1..T and t = T is the last decision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "osa/belief.hpp"

namespace osa {

struct SolverOptions {
  /// Maximum memoized states before ResourceCapError.
  std::size_t max_memo = 10'000'000;
  /// Actions whose value is within this of the maximum count as maximizers.
  double tie_tolerance = kValueTolerance;
};

struct CacheStats {
  std::size_t entries = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

struct ValueQuery {
  BeliefVector belief;
  int t = 1;
  TransitionModel model;
  HorizonSpec horizon;
  std::size_t k = 1;
};

struct SolveResult {
  double value = 0.0;
  /// Every action attaining the maximum, lexicographic order.
  std::vector<ActionSet> best_actions;
  /// Value of each action followed by optimal behaviour, lexicographic order.
  std::vector<std::pair<ActionSet, double>> action_values;
  CacheStats cache_stats;
};

namespace detail {

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint64_t>& key) const noexcept;
};

using MemoKey = std::vector<std::uint64_t>;

/// Rejects provenance tags that disagree with values seen earlier by the same solver.
class TagRegistry {
 public:
  void check(const BeliefVector& belief, const TransitionModel& model);

 private:
  std::unordered_map<std::uint64_t, double> initial_;
};

}  // namespace detail

class OptimalSolver {
 public:
  OptimalSolver(TransitionModel model, HorizonSpec horizon, std::size_t k, SolverOptions options = {});

  /// V_t(belief).
  double value(const BeliefVector& belief, int t);
  /// Value of taking `action` at t and acting optimally afterwards.
  double action_value(const BeliefVector& belief, int t, const ActionSet& action);
  SolveResult solve(const BeliefVector& belief, int t);

  /// Re-derives every memoized entry from its children; returns the number of
  /// entries whose stored value differs from the Bellman backup by more than tol.
  std::size_t count_bellman_inconsistencies(double tol);

  const CacheStats& stats() const noexcept { return stats_; }
  const TransitionModel& model() const noexcept { return model_; }
  const HorizonSpec& horizon() const noexcept { return horizon_; }
  std::size_t k() const noexcept { return k_; }

 private:
  struct Entry {
    double value;
    BeliefVector belief;
  };

  double value_impl(const BeliefVector& belief, int t);
  double backup(const BeliefVector& belief, int t, const ActionSet& action);
  const std::vector<ActionSet>& actions_for(std::size_t n);
  void check_query(const BeliefVector& belief, int t);
  detail::MemoKey key(const BeliefVector& belief, int t) const;

  TransitionModel model_;
  HorizonSpec horizon_;
  std::size_t k_;
  SolverOptions options_;
  CacheStats stats_;
  std::size_t actions_n_ = 0;
  std::vector<ActionSet> actions_;
  std::unordered_map<detail::MemoKey, Entry, detail::KeyHash> memo_;
  detail::TagRegistry registry_;
};

/// One-shot optimal solve.
SolveResult optimal_value(const ValueQuery& query, SolverOptions options = {});

class GreedyValueSolver {
 public:
  GreedyValueSolver(TransitionModel model, HorizonSpec horizon, std::size_t k, SolverOptions options = {});

  /// W_t(belief) with the entries taken in the given order. Untagged inputs get
  /// a private memo for this call; tagged inputs share the solver's memo.
  double w_value(const BeliefVector& belief, int t);
  /// W_t on the ascending-sorted belief.
  double greedy_value(const BeliefVector& belief, int t);

  const CacheStats& stats() const noexcept { return stats_; }

 private:
  struct Item {
    double value;
    std::uint64_t tag;
  };
  using Memo = std::unordered_map<detail::MemoKey, double, detail::KeyHash>;

  double recurse(const std::vector<Item>& list, int t, Memo& memo);
  void check_query(const BeliefVector& belief, int t) const;

  TransitionModel model_;
  HorizonSpec horizon_;
  std::size_t k_;
  SolverOptions options_;
  CacheStats stats_;
  Memo shared_;
  detail::TagRegistry registry_;
};

double w_value(const BeliefVector& belief, int t, const TransitionModel& model,
               const HorizonSpec& horizon, std::size_t k, SolverOptions options = {});

double greedy_value(const BeliefVector& belief, int t, const TransitionModel& model,
                    const HorizonSpec& horizon, std::size_t k, SolverOptions options = {});

/// Both sides of
///   W(prefix, y, x, suffix) - W(prefix, x, y, suffix)
///     = (x - y) * [W(prefix, 0, 1, suffix) - W(prefix, 1, 0, suffix)].
struct SwapDelta {
  double lhs;
  double rhs;
};

SwapDelta affine_swap_delta(std::span<const double> prefix, double x, double y,
                            std::span<const double> suffix, int t, const TransitionModel& model,
                            const HorizonSpec& horizon, std::size_t k, SolverOptions options = {});

/// Probability of each number of good channels among independent sensed
/// channels: entry c is the sum of q over all outcomes with c ones.
std::vector<double> good_count_distribution(std::span<const double> beliefs_on_action);

}  // namespace osa
