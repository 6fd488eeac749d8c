#include "osa/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "osa/errors.hpp"

namespace osa {
namespace detail {

std::size_t KeyHash::operator()(const std::vector<std::uint64_t>& key) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t v : key) {
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdull;
    v ^= v >> 33;
    h = (h ^ v) * 0x100000001b3ull;
  }
  return static_cast<std::size_t>(h);
}

void TagRegistry::check(const BeliefVector& belief, const TransitionModel& model) {
  if (!belief.has_provenance()) return;
  const auto tags = belief.provenance();
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const Provenance& p = tags[i];
    double expected = std::numeric_limits<double>::quiet_NaN();
    switch (p.origin) {
      case Provenance::Origin::ObservedGood:
        expected = tau_power(model.p11(), p.steps, model);
        break;
      case Provenance::Origin::ObservedBad:
        expected = tau_power(model.p01(), p.steps, model);
        break;
      case Provenance::Origin::Initial: {
        const std::uint64_t base = Provenance::initial(p.source).key();
        auto it = initial_.find(base);
        if (it == initial_.end()) {
          if (p.steps == 0) initial_.emplace(base, belief[i]);
          continue;
        }
        expected = tau_power(it->second, p.steps, model);
        break;
      }
    }
    if (std::abs(expected - belief[i]) > kProbabilityTolerance)
      throw DomainError("belief entry " + std::to_string(i + 1) +
                        " disagrees with its provenance tag for this solver");
  }
}

}  // namespace detail

namespace {

void throw_cap(std::size_t cap) {
  throw ResourceCapError("memo table exceeded the cap of " + std::to_string(cap) + " states");
}

std::uint64_t rounded_key(double v) {
  return static_cast<std::uint64_t>(std::llround(v * 1e12));
}

}  // namespace

// ---------------------------------------------------------------------------
// OptimalSolver

OptimalSolver::OptimalSolver(TransitionModel model, HorizonSpec horizon, std::size_t k,
                             SolverOptions options)
    : model_(model), horizon_(horizon), k_(k), options_(options) {
  if (k_ < 1) throw DomainError("k must be >= 1");
}

const std::vector<ActionSet>& OptimalSolver::actions_for(std::size_t n) {
  if (n != actions_n_) {
    actions_ = enumerate_actions(n, k_);
    actions_n_ = n;
  }
  return actions_;
}

void OptimalSolver::check_query(const BeliefVector& belief, int t) {
  if (t < 1 || t > horizon_.T)
    throw DomainError("time index " + std::to_string(t) + " outside 1.." + std::to_string(horizon_.T));
  if (k_ > belief.size()) throw DomainError("k exceeds the number of channels");
  registry_.check(belief, model_);
}

// V is symmetric in its arguments (channels are statistically identical), so
// the key is the sorted multiset of entry keys.
detail::MemoKey OptimalSolver::key(const BeliefVector& belief, int t) const {
  detail::MemoKey k;
  k.reserve(belief.size() + 1);
  k.push_back(static_cast<std::uint64_t>(t));
  if (belief.has_provenance()) {
    for (const auto& p : belief.provenance()) k.push_back(p.key());
  } else {
    for (double v : belief.values()) k.push_back(rounded_key(v));
  }
  std::sort(k.begin() + 1, k.end());
  return k;
}

double OptimalSolver::backup(const BeliefVector& belief, int t, const ActionSet& action) {
  double r = immediate_reward(belief, action);
  if (t == horizon_.T || horizon_.beta == 0.0) return r;
  double cont = 0.0;
  for (const auto& outcome : enumerate_outcomes(beliefs_on(belief, action))) {
    if (outcome.probability == 0.0) continue;
    cont += outcome.probability * value_impl(update_belief(belief, action, outcome, model_), t + 1);
  }
  return r + horizon_.beta * cont;
}

double OptimalSolver::value_impl(const BeliefVector& belief, int t) {
  auto k = key(belief, t);
  if (auto it = memo_.find(k); it != memo_.end()) {
    ++stats_.hits;
    return it->second.value;
  }
  ++stats_.misses;
  double best = -std::numeric_limits<double>::infinity();
  // copy: recursion may rebuild actions_ for a different n
  const std::vector<ActionSet> actions = actions_for(belief.size());
  for (const auto& a : actions) best = std::max(best, backup(belief, t, a));
  if (memo_.size() >= options_.max_memo) throw_cap(options_.max_memo);
  memo_.emplace(std::move(k), Entry{best, belief});
  stats_.entries = memo_.size();
  return best;
}

double OptimalSolver::value(const BeliefVector& belief, int t) {
  check_query(belief, t);
  return value_impl(belief, t);
}

double OptimalSolver::action_value(const BeliefVector& belief, int t, const ActionSet& action) {
  check_query(belief, t);
  action.validate(belief.size(), k_);
  return backup(belief, t, action);
}

SolveResult OptimalSolver::solve(const BeliefVector& belief, int t) {
  check_query(belief, t);
  SolveResult res;
  const std::vector<ActionSet> actions = actions_for(belief.size());
  res.value = -std::numeric_limits<double>::infinity();
  for (const auto& a : actions) {
    const double q = backup(belief, t, a);
    res.action_values.emplace_back(a, q);
    res.value = std::max(res.value, q);
  }
  for (const auto& [a, q] : res.action_values)
    if (q >= res.value - options_.tie_tolerance) res.best_actions.push_back(a);
  res.cache_stats = stats_;
  return res;
}

std::size_t OptimalSolver::count_bellman_inconsistencies(double tol) {
  std::vector<std::pair<int, const Entry*>> snapshot;
  snapshot.reserve(memo_.size());
  for (const auto& [k, e] : memo_) snapshot.emplace_back(static_cast<int>(k.front()), &e);
  // collect values first; backups may insert into memo_ and rehash
  std::vector<std::pair<double, BeliefVector>> items;
  std::vector<int> times;
  for (auto [t, e] : snapshot) {
    items.emplace_back(e->value, e->belief);
    times.push_back(t);
  }
  std::size_t bad = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    const std::vector<ActionSet> actions = actions_for(items[i].second.size());
    for (const auto& a : actions) best = std::max(best, backup(items[i].second, times[i], a));
    if (std::abs(best - items[i].first) > tol) ++bad;
  }
  return bad;
}

SolveResult optimal_value(const ValueQuery& query, SolverOptions options) {
  OptimalSolver solver(query.model, query.horizon, query.k, options);
  return solver.solve(query.belief, query.t);
}

// ---------------------------------------------------------------------------
// GreedyValueSolver

std::vector<double> good_count_distribution(std::span<const double> beliefs_on_action) {
  std::vector<double> dist(beliefs_on_action.size() + 1, 0.0);
  dist[0] = 1.0;
  std::size_t len = 1;
  for (double p : beliefs_on_action) {
    for (std::size_t c = len; c > 0; --c) dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
    dist[0] *= 1.0 - p;
    ++len;
  }
  return dist;
}

GreedyValueSolver::GreedyValueSolver(TransitionModel model, HorizonSpec horizon, std::size_t k,
                                     SolverOptions options)
    : model_(model), horizon_(horizon), k_(k), options_(options) {
  if (k_ < 1) throw DomainError("k must be >= 1");
}

void GreedyValueSolver::check_query(const BeliefVector& belief, int t) const {
  if (t < 1 || t > horizon_.T)
    throw DomainError("time index " + std::to_string(t) + " outside 1.." + std::to_string(horizon_.T));
  if (k_ > belief.size()) throw DomainError("k exceeds the number of channels");
}

double GreedyValueSolver::recurse(const std::vector<Item>& list, int t, Memo& memo) {
  const std::size_t n = list.size();
  detail::MemoKey key;
  key.reserve(n + 1);
  key.push_back(static_cast<std::uint64_t>(t));
  for (const auto& it : list) key.push_back(it.tag);
  if (auto found = memo.find(key); found != memo.end()) {
    ++stats_.hits;
    return found->second;
  }
  ++stats_.misses;

  const std::size_t unsensed = n - k_;
  double r = 0.0;
  std::vector<double> sensed(k_);
  for (std::size_t i = 0; i < k_; ++i) {
    sensed[i] = list[unsensed + i].value;
    r += sensed[i];
  }

  if (t < horizon_.T && horizon_.beta != 0.0) {
    const auto dist = good_count_distribution(sensed);
    const Item bad{model_.p01(), Provenance::bad().key()};
    const Item good{model_.p11(), Provenance::good().key()};
    std::vector<Item> child(n);
    double cont = 0.0;
    for (std::size_t goods = 0; goods <= k_; ++goods) {
      if (dist[goods] == 0.0) continue;
      std::size_t pos = 0;
      for (std::size_t b = 0; b < k_ - goods; ++b) child[pos++] = bad;
      for (std::size_t i = 0; i < unsensed; ++i)
        child[pos++] = Item{tau(list[i].value, model_), list[i].tag + 1};
      for (std::size_t g = 0; g < goods; ++g) child[pos++] = good;
      cont += dist[goods] * recurse(child, t + 1, memo);
    }
    r += horizon_.beta * cont;
  }

  if (memo.size() >= options_.max_memo) throw_cap(options_.max_memo);
  memo.emplace(std::move(key), r);
  stats_.entries = memo.size();
  return r;
}

double GreedyValueSolver::w_value(const BeliefVector& belief, int t) {
  check_query(belief, t);
  std::vector<Item> list(belief.size());
  if (belief.has_provenance()) {
    registry_.check(belief, model_);
    for (std::size_t i = 0; i < list.size(); ++i) list[i] = {belief[i], belief.provenance()[i].key()};
    return recurse(list, t, shared_);
  }
  for (std::size_t i = 0; i < list.size(); ++i)
    list[i] = {belief[i], Provenance::initial(static_cast<std::uint32_t>(i)).key()};
  Memo local;
  return recurse(list, t, local);
}

double GreedyValueSolver::greedy_value(const BeliefVector& belief, int t) {
  std::vector<std::size_t> order(belief.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return belief[a] < belief[b]; });
  std::vector<double> values(order.size());
  std::vector<Provenance> tags;
  if (belief.has_provenance()) tags.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    values[i] = belief[order[i]];
    if (!tags.empty()) tags[i] = belief.provenance()[order[i]];
  }
  return w_value(BeliefVector(std::move(values), std::move(tags)), t);
}

double w_value(const BeliefVector& belief, int t, const TransitionModel& model,
               const HorizonSpec& horizon, std::size_t k, SolverOptions options) {
  GreedyValueSolver solver(model, horizon, k, options);
  return solver.w_value(belief, t);
}

double greedy_value(const BeliefVector& belief, int t, const TransitionModel& model,
                    const HorizonSpec& horizon, std::size_t k, SolverOptions options) {
  GreedyValueSolver solver(model, horizon, k, options);
  return solver.greedy_value(belief, t);
}

SwapDelta affine_swap_delta(std::span<const double> prefix, double x, double y,
                            std::span<const double> suffix, int t, const TransitionModel& model,
                            const HorizonSpec& horizon, std::size_t k, SolverOptions options) {
  auto assemble = [&](double first, double second) {
    std::vector<double> v(prefix.begin(), prefix.end());
    v.push_back(first);
    v.push_back(second);
    v.insert(v.end(), suffix.begin(), suffix.end());
    return BeliefVector(std::move(v));
  };
  auto w = [&](double first, double second) {
    return w_value(assemble(first, second), t, model, horizon, k, options);
  };
  SwapDelta d;
  d.lhs = w(y, x) - w(x, y);
  d.rhs = (x - y) * (w(0.0, 1.0) - w(1.0, 0.0));
  return d;
}

}  // namespace osa
