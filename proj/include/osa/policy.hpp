#pragma once

// Channel-selection policies behind one interface, plus exact (analytic)
// policy evaluation over the full outcome tree.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osa/belief.hpp"
#include "osa/dp.hpp"
#include "osa/rng.hpp"

namespace osa {

/// A channel-selection rule. A policy instance may carry per-run state
/// (ordered list, RNG); run it through reset() / select() / observe().
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  /// Action for the current step; exactly k valid indices.
  virtual ActionSet select(const BeliefVector& belief, int t) = 0;
  /// Feedback of the outcome of the action just selected.
  virtual void observe(const ActionSet& /*action*/, const OutcomeRealization& /*outcome*/) {}
  /// Start of a new run; `stream` is the policy's private randomness.
  virtual void reset(const CounterRng& /*stream*/) {}
  virtual std::unique_ptr<Policy> clone() const = 0;

  /// Action is a function of (belief, t) alone.
  virtual bool markov() const { return true; }
  /// Action is a deterministic function of the history.
  virtual bool deterministic() const { return true; }
};

/// Indices of the k largest entries; ties go to the lowest index.
ActionSet greedy_action(const BeliefVector& belief, std::size_t k);

/// Every k-subset whose one-step reward ties the greedy maximum (within
/// kProbabilityTolerance), lexicographic order.
std::vector<ActionSet> tied_greedy_actions(const BeliefVector& belief, std::size_t k);

/// Lexicographically smallest maximizer of the DP at (belief, t).
ActionSet optimal_action(OptimalSolver& solver, const BeliefVector& belief, int t);
ActionSet optimal_action(const BeliefVector& belief, int t, const TransitionModel& model,
                         const HorizonSpec& horizon, std::size_t k, SolverOptions options = {});

/// Ordered-list state: a permutation of 0..n-1 whose back is the top of the list.
using ChannelList = std::vector<std::size_t>;

struct ListStep {
  ActionSet action;
  ChannelList list;
};

/// Advances the ordered list by the outcome of its previous top-k action
/// (sensed-bad channels to the bottom, sensed-good channels to the top, both
/// in their previous order, unsensed channels keep their relative order) and
/// returns the new top-k. With no outcome (first step) the list is unchanged.
ListStep ordered_list_policy_step(const ChannelList& list, std::size_t k,
                                  const std::optional<OutcomeRealization>& last_outcome);

/// Ascending order of the belief; ties place lower indices nearer the top.
ChannelList ascending_list(const BeliefVector& belief);

class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(std::size_t k) : k_(k) {}
  std::string name() const override { return "greedy"; }
  ActionSet select(const BeliefVector& belief, int) override { return greedy_action(belief, k_); }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<GreedyPolicy>(*this); }

 private:
  std::size_t k_;
};

class OptimalPolicy final : public Policy {
 public:
  OptimalPolicy(TransitionModel model, HorizonSpec horizon, std::size_t k, SolverOptions options = {});
  std::string name() const override { return "optimal"; }
  ActionSet select(const BeliefVector& belief, int t) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<OptimalPolicy>(*this); }

 private:
  OptimalSolver solver_;
};

class OrderedListPolicy final : public Policy {
 public:
  /// Without an initial list, the first select() orders channels ascending by belief.
  explicit OrderedListPolicy(std::size_t k, std::optional<ChannelList> initial = std::nullopt);
  std::string name() const override { return "ordered-list"; }
  ActionSet select(const BeliefVector& belief, int t) override;
  void observe(const ActionSet& action, const OutcomeRealization& outcome) override;
  void reset(const CounterRng&) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<OrderedListPolicy>(*this); }
  bool markov() const override { return false; }

  const ChannelList& list() const noexcept { return list_; }

 private:
  std::size_t k_;
  std::optional<ChannelList> initial_;
  ChannelList list_;
  std::optional<OutcomeRealization> pending_;
  ActionSet last_action_;
};

/// Step t senses channels (t-1)k, ..., (t-1)k + k-1 modulo n.
class RoundRobinPolicy final : public Policy {
 public:
  RoundRobinPolicy(std::size_t n, std::size_t k);
  std::string name() const override { return "round-robin"; }
  ActionSet select(const BeliefVector& belief, int t) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<RoundRobinPolicy>(*this); }

 private:
  std::size_t n_;
  std::size_t k_;
};

class FixedSetPolicy final : public Policy {
 public:
  explicit FixedSetPolicy(ActionSet action) : action_(std::move(action)) {}
  std::string name() const override { return "fixed"; }
  ActionSet select(const BeliefVector& belief, int) override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<FixedSetPolicy>(*this); }

 private:
  ActionSet action_;
};

/// Uniformly random k-subset each step. Seeded at construction; reset()
/// replaces the stream.
class UniformRandomPolicy final : public Policy {
 public:
  UniformRandomPolicy(std::size_t n, std::size_t k, std::uint64_t seed);
  std::string name() const override { return "random"; }
  ActionSet select(const BeliefVector& belief, int t) override;
  void reset(const CounterRng& stream) override { rng_ = stream; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<UniformRandomPolicy>(*this); }
  bool markov() const override { return false; }
  bool deterministic() const override { return false; }

 private:
  std::size_t n_;
  std::size_t k_;
  CounterRng rng_;
};

struct PolicyParams {
  TransitionModel model{0.0, 0.0};
  HorizonSpec horizon;
  std::size_t n = 1;
  std::size_t k = 1;
  std::optional<ActionSet> fixed_set;  // required by "fixed"
  std::uint64_t seed = 0;              // used by "random"
  SolverOptions solver;
};

/// Names: greedy, optimal, ordered-list, round-robin, fixed, random.
std::unique_ptr<Policy> make_policy(std::string_view name, const PolicyParams& params);
bool is_policy_name(std::string_view name);

/// Exact expected discounted reward from t to T of running `policy` (from its
/// current state) with information state `belief`. Optionally forces the
/// first action. Requires a deterministic policy.
double evaluate_policy(const Policy& policy, const BeliefVector& belief, int t,
                       const TransitionModel& model, const HorizonSpec& horizon, std::size_t k,
                       const std::optional<ActionSet>& first_action = std::nullopt,
                       SolverOptions options = {});

}  // namespace osa
