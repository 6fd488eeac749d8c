#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "osa/errors.hpp"
#include "osa/policy.hpp"
#include "osa/simulator.hpp"

using namespace osa;

namespace {

TransitionModel positive_model(CounterRng& rng) {
  double a = rng.uniform(), b = rng.uniform();
  if (a > b) std::swap(a, b);
  return {a, b};
}

std::vector<double> random_belief(CounterRng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform();
  return w;
}

}  // namespace

TEST_CASE("greedy action picks the k largest, lowest index on ties") {
  CHECK(greedy_action(BeliefVector({0.1, 0.9, 0.5}), 2) == ActionSet::one_based({2, 3}));
  CHECK(greedy_action(BeliefVector({0.4, 0.4, 0.4, 0.4}), 2) == ActionSet::one_based({1, 2}));
  CHECK(greedy_action(BeliefVector({0.3, 0.3, 0.7}), 1) == ActionSet::one_based({3}));
  CHECK_THROWS_AS(greedy_action(BeliefVector({0.3}), 2), DomainError);
}

TEST_CASE("tied greedy actions enumerate every tie-equivalent set") {
  const auto tied = tied_greedy_actions(BeliefVector({0.4, 0.9, 0.4, 0.4}), 2);
  REQUIRE(tied.size() == 3);
  CHECK(tied[0] == ActionSet::one_based({1, 2}));
  CHECK(tied[1] == ActionSet::one_based({2, 3}));
  CHECK(tied[2] == ActionSet::one_based({2, 4}));
  CHECK(tied_greedy_actions(BeliefVector({0.1, 0.2, 0.3}), 2).size() == 1);
}

TEST_CASE("greedy action depends only on the ordering") {
  CounterRng rng(31, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(8), k = 1 + rng.below(n);
    const auto w = random_belief(rng, n);
    std::vector<double> cubed(w), shifted(w);
    for (auto& x : cubed) x = x * x * x;
    for (auto& x : shifted) x = 0.5 * x + 0.25;
    const auto a = greedy_action(BeliefVector(w), k);
    CHECK(greedy_action(BeliefVector(cubed), k) == a);
    CHECK(greedy_action(BeliefVector(shifted), k) == a);
  }
}

TEST_CASE("optimal action") {
  const TransitionModel m(0.3, 0.8);
  const HorizonSpec h(3, 0.9);
  CounterRng rng(32, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = BeliefVector::initial(random_belief(rng, 4));
    CHECK(optimal_action(w, 3, m, h, 2) == greedy_action(w, 2));  // terminal step
  }
  CHECK(optimal_action(BeliefVector({0.2, 0.6, 0.1}), 1, m, h, 3) == ActionSet::one_based({1, 2, 3}));
}

TEST_CASE("optimal action value equals greedy action value with positive correlation") {
  CounterRng rng(33, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng.below(3), k = 1 + rng.below(n);
    const auto m = positive_model(rng);
    const HorizonSpec h(1 + static_cast<int>(rng.below(4)), rng.uniform());
    const auto w = BeliefVector::initial(random_belief(rng, n));
    OptimalSolver solver(m, h, k);
    const double q_opt = solver.action_value(w, 1, optimal_action(solver, w, 1));
    const double q_greedy = solver.action_value(w, 1, greedy_action(w, k));
    CHECK(std::abs(q_opt - q_greedy) <= 1e-9);
  }
}

TEST_CASE("ordered list step semantics") {
  // list back is the top; n = 4, k = 2, top = {3, 4} (one-based)
  const ChannelList list{0, 1, 2, 3};
  auto first = ordered_list_policy_step(list, 2, std::nullopt);
  CHECK(first.action == ActionSet::one_based({3, 4}));
  CHECK(first.list == list);

  // channel 3 bad, channel 4 good -> 3 to the bottom, 4 stays on top
  auto next = ordered_list_policy_step(list, 2, OutcomeRealization{{0, 1}, 0.0});
  CHECK(next.list == ChannelList{2, 0, 1, 3});
  CHECK(next.action == ActionSet::one_based({2, 4}));

  // all good: the same channels are kept
  auto good = ordered_list_policy_step(ChannelList{1, 0}, 1, OutcomeRealization{{1}, 0.0});
  CHECK(good.action == ActionSet::one_based({1}));
  for (int s = 0; s < 5; ++s) good = ordered_list_policy_step(good.list, 1, OutcomeRealization{{1}, 0.0});
  CHECK(good.action == ActionSet::one_based({1}));

  // k = n always senses everything
  auto all = ordered_list_policy_step(ChannelList{2, 0, 1}, 3, OutcomeRealization{{1, 0, 1}, 0.0});
  CHECK(all.action == ActionSet::one_based({1, 2, 3}));

  CHECK_THROWS_AS(ordered_list_policy_step(ChannelList{0, 0, 1}, 1, std::nullopt), DomainError);
  CHECK_THROWS_AS(ordered_list_policy_step(ChannelList{0, 3, 1}, 1, std::nullopt), DomainError);
}

TEST_CASE("ordered list value equals W for arbitrary initial order") {
  CounterRng rng(34, 0);
  for (int trial = 0; trial < 80; ++trial) {
    const std::size_t n = 2 + rng.below(4), k = 1 + rng.below(n);
    const TransitionModel m(rng.uniform(), rng.uniform());
    const HorizonSpec h(1 + static_cast<int>(rng.below(4)), rng.uniform());
    const auto w = random_belief(rng, n);
    ChannelList identity(n);
    for (std::size_t i = 0; i < n; ++i) identity[i] = i;
    const OrderedListPolicy policy(k, identity);
    const double exact = evaluate_policy(policy, BeliefVector(w), 1, m, h, k);
    CHECK(std::abs(exact - w_value(BeliefVector(w), 1, m, h, k)) < 1e-12);
  }
}

TEST_CASE("ordered list from ascending order tracks greedy with positive correlation") {
  CounterRng rng(35, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(5), k = 1 + rng.below(n);
    const auto m = positive_model(rng);
    SimConfig cfg;
    cfg.model = m;
    cfg.horizon = HorizonSpec(6, 0.9);
    cfg.k = k;
    cfg.initial_belief = BeliefVector(random_belief(rng, n));
    cfg.seed = 100 + static_cast<std::uint64_t>(trial);
    cfg.trace_replications = 3;
    cfg.replications = 3;
    const auto greedy = simulate(cfg, GreedyPolicy(k));
    const auto listed = simulate(cfg, OrderedListPolicy(k));
    for (std::size_t r = 0; r < 3; ++r) {
      BeliefVector b = cfg.initial_belief;
      for (std::size_t s = 0; s < greedy.traces[r].steps.size(); ++s) {
        const auto& gs = greedy.traces[r].steps[s];
        const auto& ls = listed.traces[r].steps[s];
        // same choice up to exchanging equal-belief channels
        CHECK(std::abs(immediate_reward(b, gs.action) - immediate_reward(b, ls.action)) < 1e-12);
        b = update_belief(b, gs.action, {gs.observation, 0.0}, m);
        if (gs.action != ls.action) break;  // paths diverge after a tie swap
      }
    }
  }
}

TEST_CASE("baseline policies") {
  const BeliefVector b({0.1, 0.2, 0.3, 0.4});
  RoundRobinPolicy rr(4, 2);
  CHECK(rr.select(b, 1) == ActionSet::one_based({1, 2}));
  CHECK(rr.select(b, 2) == ActionSet::one_based({3, 4}));
  CHECK(rr.select(b, 3) == ActionSet::one_based({1, 2}));
  RoundRobinPolicy rr3(3, 2);
  CHECK(rr3.select(BeliefVector({0.1, 0.2, 0.3}), 2) == ActionSet::one_based({1, 3}));

  FixedSetPolicy fixed(ActionSet::one_based({1, 3}));
  for (int t = 1; t <= 4; ++t) CHECK(fixed.select(b, t) == ActionSet::one_based({1, 3}));

  UniformRandomPolicy r1(4, 2, 99), r2(4, 2, 99), r3(4, 2, 100);
  bool differs = false;
  for (int t = 1; t <= 50; ++t) {
    const auto a = r1.select(b, t);
    CHECK(a == r2.select(b, t));
    CHECK(a.size() == 2);
    differs |= a != r3.select(b, t);
  }
  CHECK(differs);

  CHECK_THROWS_AS(RoundRobinPolicy(2, 3), DomainError);
  CHECK_THROWS_AS(UniformRandomPolicy(2, 0, 1), DomainError);
}

TEST_CASE("policy factory") {
  PolicyParams p;
  p.model = TransitionModel(0.2, 0.7);
  p.horizon = HorizonSpec(3, 0.9);
  p.n = 4;
  p.k = 2;
  for (const char* name : {"greedy", "optimal", "ordered-list", "round-robin", "random"})
    CHECK(make_policy(name, p)->name() == name);
  CHECK_THROWS_AS(make_policy("fixed", p), DomainError);
  p.fixed_set = ActionSet::one_based({2, 4});
  CHECK(make_policy("fixed", p)->name() == "fixed");
  CHECK_THROWS_AS(make_policy("whittle", p), DomainError);
  CHECK_FALSE(is_policy_name("whittle"));
}

TEST_CASE("exact policy evaluation matches oracles") {
  CounterRng rng(36, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng.below(3), k = 1 + rng.below(n);
    const int T = 1 + static_cast<int>(rng.below(4));
    const double beta = rng.uniform();
    const oracle::Chain c{rng.uniform(), rng.uniform()};
    const TransitionModel m(c.p01, c.p11);
    const HorizonSpec h(T, beta);
    const auto w = random_belief(rng, n);
    // optimal policy achieves the exhaustive optimum
    const OptimalPolicy opt(m, h, k);
    CHECK(std::abs(evaluate_policy(opt, BeliefVector(w), 1, m, h, k) - oracle::optimal(w, 1, T, beta, k, c)) <
          1e-12);
    // sensing everything is the marginal closed form
    CHECK(std::abs(evaluate_policy(GreedyPolicy(n), BeliefVector(w), 1, m, h, n) -
                   oracle::all_channels(w, 1, T, beta, c)) < 1e-12);
  }
  CHECK_THROWS_AS(evaluate_policy(UniformRandomPolicy(2, 1, 1), BeliefVector({0.5, 0.5}), 1, TransitionModel(0.2, 0.8),
                                  HorizonSpec(2, 1.0), 1),
                  DomainError);
}

TEST_CASE("greedy value equals exact greedy evaluation with positive correlation") {
  CounterRng rng(37, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(4), k = 1 + rng.below(n);
    const auto m = positive_model(rng);
    const HorizonSpec h(1 + static_cast<int>(rng.below(5)), rng.uniform());
    const auto w = random_belief(rng, n);
    CHECK(std::abs(greedy_value(BeliefVector(w), 1, m, h, k) -
                   evaluate_policy(GreedyPolicy(k), BeliefVector(w), 1, m, h, k)) < 1e-12);
  }
}
