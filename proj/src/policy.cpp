#include "osa/policy.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "osa/errors.hpp"

namespace osa {

ActionSet greedy_action(const BeliefVector& belief, std::size_t k) {
  const std::size_t n = belief.size();
  if (k < 1 || k > n) throw DomainError("need 1 <= k <= n for the greedy action");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return belief[a] > belief[b]; });
  order.resize(k);
  return ActionSet(std::move(order));
}

std::vector<ActionSet> tied_greedy_actions(const BeliefVector& belief, std::size_t k) {
  const double best = immediate_reward(belief, greedy_action(belief, k));
  std::vector<ActionSet> out;
  for (auto& a : enumerate_actions(belief.size(), k))
    if (immediate_reward(belief, a) >= best - kProbabilityTolerance) out.push_back(std::move(a));
  return out;
}

ActionSet optimal_action(OptimalSolver& solver, const BeliefVector& belief, int t) {
  auto res = solver.solve(belief, t);
  return res.best_actions.front();
}

ActionSet optimal_action(const BeliefVector& belief, int t, const TransitionModel& model,
                         const HorizonSpec& horizon, std::size_t k, SolverOptions options) {
  OptimalSolver solver(model, horizon, k, options);
  return optimal_action(solver, belief, t);
}

namespace {

void require_permutation(const ChannelList& list) {
  std::vector<bool> seen(list.size(), false);
  for (std::size_t c : list) {
    if (c >= list.size() || seen[c]) throw DomainError("channel list is not a permutation");
    seen[c] = true;
  }
}

ActionSet top_of(const ChannelList& list, std::size_t k) {
  return ActionSet(std::vector<std::size_t>(list.end() - static_cast<std::ptrdiff_t>(k), list.end()));
}

}  // namespace

ListStep ordered_list_policy_step(const ChannelList& list, std::size_t k,
                                  const std::optional<OutcomeRealization>& last_outcome) {
  require_permutation(list);
  if (k < 1 || k > list.size()) throw DomainError("need 1 <= k <= n for the ordered list");
  if (!last_outcome) return {top_of(list, k), list};

  const ActionSet sensed = top_of(list, k);
  if (last_outcome->bits.size() != k) throw DomainError("outcome is not aligned with the list's top-k");
  auto bit_of = [&](std::size_t channel) {
    const auto idx = sensed.indices();
    const auto pos = std::lower_bound(idx.begin(), idx.end(), channel) - idx.begin();
    return last_outcome->bits[static_cast<std::size_t>(pos)] != 0;
  };

  ChannelList bad, middle, good;
  for (std::size_t c : list) {
    if (!sensed.contains(c))
      middle.push_back(c);
    else if (bit_of(c))
      good.push_back(c);
    else
      bad.push_back(c);
  }
  ChannelList next;
  next.reserve(list.size());
  next.insert(next.end(), bad.begin(), bad.end());
  next.insert(next.end(), middle.begin(), middle.end());
  next.insert(next.end(), good.begin(), good.end());
  return {top_of(next, k), std::move(next)};
}

ChannelList ascending_list(const BeliefVector& belief) {
  ChannelList order(belief.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (belief[a] != belief[b]) return belief[a] < belief[b];
    return a > b;
  });
  return order;
}

OptimalPolicy::OptimalPolicy(TransitionModel model, HorizonSpec horizon, std::size_t k,
                             SolverOptions options)
    : solver_(model, horizon, k, options) {}

ActionSet OptimalPolicy::select(const BeliefVector& belief, int t) {
  return optimal_action(solver_, belief, t);
}

OrderedListPolicy::OrderedListPolicy(std::size_t k, std::optional<ChannelList> initial)
    : k_(k), initial_(std::move(initial)) {
  if (initial_) require_permutation(*initial_);
}

ActionSet OrderedListPolicy::select(const BeliefVector& belief, int) {
  if (list_.empty()) list_ = initial_ ? *initial_ : ascending_list(belief);
  if (list_.size() != belief.size()) throw DomainError("ordered list does not match the belief length");
  auto step = ordered_list_policy_step(list_, k_, pending_);
  list_ = std::move(step.list);
  pending_.reset();
  last_action_ = step.action;
  return step.action;
}

void OrderedListPolicy::observe(const ActionSet& action, const OutcomeRealization& outcome) {
  if (action != last_action_) throw DomainError("ordered-list policy observed an action it did not take");
  pending_ = outcome;
}

void OrderedListPolicy::reset(const CounterRng&) {
  list_.clear();
  pending_.reset();
  last_action_ = ActionSet();
}

RoundRobinPolicy::RoundRobinPolicy(std::size_t n, std::size_t k) : n_(n), k_(k) {
  if (k < 1 || k > n) throw DomainError("round-robin needs 1 <= k <= n");
}

ActionSet RoundRobinPolicy::select(const BeliefVector& belief, int t) {
  if (belief.size() != n_) throw DomainError("round-robin configured for a different n");
  std::vector<std::size_t> idx(k_);
  const std::size_t start = (static_cast<std::size_t>(t - 1) * k_) % n_;
  for (std::size_t j = 0; j < k_; ++j) idx[j] = (start + j) % n_;
  return ActionSet(std::move(idx));
}

ActionSet FixedSetPolicy::select(const BeliefVector& belief, int) {
  action_.validate(belief.size(), action_.size());
  return action_;
}

UniformRandomPolicy::UniformRandomPolicy(std::size_t n, std::size_t k, std::uint64_t seed)
    : n_(n), k_(k), rng_(seed, 0) {
  if (k < 1 || k > n) throw DomainError("random policy needs 1 <= k <= n");
}

ActionSet UniformRandomPolicy::select(const BeliefVector& belief, int) {
  if (belief.size() != n_) throw DomainError("random policy configured for a different n");
  std::vector<std::size_t> pool(n_);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t j = 0; j < k_; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng_.below(n_ - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(k_);
  return ActionSet(std::move(pool));
}

bool is_policy_name(std::string_view name) {
  return name == "greedy" || name == "optimal" || name == "ordered-list" || name == "round-robin" ||
         name == "fixed" || name == "random";
}

std::unique_ptr<Policy> make_policy(std::string_view name, const PolicyParams& p) {
  if (p.k < 1 || p.k > p.n) throw DomainError("need 1 <= k <= n");
  if (name == "greedy") return std::make_unique<GreedyPolicy>(p.k);
  if (name == "optimal") return std::make_unique<OptimalPolicy>(p.model, p.horizon, p.k, p.solver);
  if (name == "ordered-list") return std::make_unique<OrderedListPolicy>(p.k);
  if (name == "round-robin") return std::make_unique<RoundRobinPolicy>(p.n, p.k);
  if (name == "fixed") {
    if (!p.fixed_set) throw DomainError("policy 'fixed' needs a channel set");
    p.fixed_set->validate(p.n, p.k);
    return std::make_unique<FixedSetPolicy>(*p.fixed_set);
  }
  if (name == "random") return std::make_unique<UniformRandomPolicy>(p.n, p.k, p.seed);
  throw DomainError("unknown policy '" + std::string(name) + "'");
}

namespace {

class PolicyEvaluator {
 public:
  PolicyEvaluator(const TransitionModel& model, const HorizonSpec& horizon, std::size_t k,
                  SolverOptions options)
      : model_(model), horizon_(horizon), k_(k), options_(options) {}

  double run(Policy& policy, const BeliefVector& belief, int t, const std::optional<ActionSet>& forced) {
    const bool markov = policy.markov();
    detail::MemoKey key;
    if (markov && !forced) {
      key.reserve(belief.size() + 1);
      key.push_back(static_cast<std::uint64_t>(t));
      for (const auto& p : belief.provenance()) key.push_back(p.key());
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }

    const ActionSet action = forced ? *forced : policy.select(belief, t);
    action.validate(belief.size(), k_);
    double r = immediate_reward(belief, action);
    if (t < horizon_.T && horizon_.beta != 0.0) {
      double cont = 0.0;
      for (const auto& outcome : enumerate_outcomes(beliefs_on(belief, action))) {
        if (outcome.probability == 0.0) continue;
        const BeliefVector child = update_belief(belief, action, outcome, model_);
        if (markov) {
          cont += outcome.probability * run(policy, child, t + 1, std::nullopt);
        } else {
          auto branch = policy.clone();
          branch->observe(action, outcome);
          cont += outcome.probability * run(*branch, child, t + 1, std::nullopt);
        }
      }
      r += horizon_.beta * cont;
    }

    if (markov && !forced) {
      if (memo_.size() >= options_.max_memo)
        throw ResourceCapError("policy evaluation exceeded the memo cap of " +
                               std::to_string(options_.max_memo) + " states");
      memo_.emplace(std::move(key), r);
    }
    return r;
  }

 private:
  TransitionModel model_;
  HorizonSpec horizon_;
  std::size_t k_;
  SolverOptions options_;
  std::unordered_map<detail::MemoKey, double, detail::KeyHash> memo_;
};

}  // namespace

double evaluate_policy(const Policy& policy, const BeliefVector& belief, int t,
                       const TransitionModel& model, const HorizonSpec& horizon, std::size_t k,
                       const std::optional<ActionSet>& first_action, SolverOptions options) {
  if (!policy.deterministic()) throw DomainError("exact evaluation needs a deterministic policy");
  if (first_action && !policy.markov())
    throw DomainError("a forced first action needs a Markov policy");
  if (t < 1 || t > horizon.T) throw DomainError("time index outside the horizon");
  if (k < 1 || k > belief.size()) throw DomainError("need 1 <= k <= n");
  // fresh Initial tags give exact memo keys for this evaluation
  const BeliefVector root = BeliefVector::initial({belief.values().begin(), belief.values().end()});
  auto runner = policy.clone();
  PolicyEvaluator eval(model, horizon, k, options);
  return eval.run(*runner, root, t, first_action);
}

}  // namespace osa
