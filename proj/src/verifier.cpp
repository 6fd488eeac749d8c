#include "osa/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "osa/errors.hpp"
#include "osa/policy.hpp"
#include "osa/rng.hpp"

namespace osa {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Positive: return "positive";
    case Regime::Negative: return "negative";
    case Regime::Boundary: return "boundary";
    case Regime::Any: return "any";
  }
  return "?";
}

std::string to_string(BeliefLaw b) {
  switch (b) {
    case BeliefLaw::Mixed: return "mixed";
    case BeliefLaw::Uniform: return "uniform";
    case BeliefLaw::Sorted: return "sorted";
    case BeliefLaw::Reachable: return "reachable";
    case BeliefLaw::BoundaryHeavy: return "boundary";
  }
  return "?";
}

Regime parse_regime(const std::string& s) {
  for (Regime r : {Regime::Positive, Regime::Negative, Regime::Boundary, Regime::Any})
    if (to_string(r) == s) return r;
  throw DomainError("unknown correlation regime '" + s + "'");
}

BeliefLaw parse_belief_law(const std::string& s) {
  for (BeliefLaw b : {BeliefLaw::Mixed, BeliefLaw::Uniform, BeliefLaw::Sorted, BeliefLaw::Reachable,
                      BeliefLaw::BoundaryHeavy})
    if (to_string(b) == s) return b;
  throw DomainError("unknown belief law '" + s + "'");
}

std::size_t CheckResult::assertions() const noexcept {
  std::size_t total = 0;
  for (const auto& [id, tally] : properties) total += tally.assertions;
  return total;
}

// ---------------------------------------------------------------------------
// sampling

void InstanceSampler::validate() const {
  if (n_min < 1 || n_max < n_min) throw DomainError("sampler needs 1 <= n_min <= n_max");
  if (n_max > 12) throw DomainError("sampler n_max above 12 is outside exact-solver range");
  if (T_min < 1 || T_max < T_min) throw DomainError("sampler needs 1 <= T_min <= T_max");
  if (!(beta_min >= 0.0 && beta_max <= 1.0 && beta_min <= beta_max))
    throw DomainError("sampler needs 0 <= beta_min <= beta_max <= 1");
  if (k_max != 0 && k_max < k_min) throw DomainError("sampler needs k_min <= k_max");
  if (k_min < 1) throw DomainError("sampler needs k_min >= 1");
  if (k_min > n_max) throw DomainError("sampler k_min exceeds n_max");
}

namespace {

int uniform_int(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

Instance InstanceSampler::sample(std::size_t index) const {
  validate();
  CounterRng rng(seed, index, 0x5a);
  Instance inst;
  inst.seed = seed;
  inst.index = index;
  inst.n = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(std::max(n_min, k_min)),
                                                static_cast<int>(n_max)));
  const std::size_t k_hi = k_max ? std::min(k_max, inst.n) : inst.n;
  const std::size_t k_lo = std::min(k_min, k_hi);
  inst.k = all_channels ? inst.n
                        : static_cast<std::size_t>(uniform_int(rng, static_cast<int>(k_lo), static_cast<int>(k_hi)));
  inst.T = uniform_int(rng, T_min, T_max);

  const double ub = rng.uniform();
  inst.beta = ub < 0.1 ? beta_min : ub < 0.2 ? beta_max : rng.uniform(beta_min, beta_max);

  double a = rng.uniform(), b = rng.uniform();
  const double shape = rng.uniform();
  switch (regime) {
    case Regime::Positive:
      if (shape < 0.1) b = a;
      else if (shape < 0.2) a = 0.0;
      else if (shape < 0.3) b = 1.0;
      inst.p01 = std::min(a, b);
      inst.p11 = std::max(a, b);
      break;
    case Regime::Negative:
      while (a == b) b = rng.uniform();
      inst.p01 = std::max(a, b);
      inst.p11 = std::min(a, b);
      break;
    case Regime::Boundary:
      inst.p01 = inst.p11 = a;
      break;
    case Regime::Any:
      inst.p01 = a;
      inst.p11 = b;
      break;
  }

  BeliefLaw chosen = law;
  if (law == BeliefLaw::Mixed) {
    static constexpr BeliefLaw strata[] = {BeliefLaw::Uniform, BeliefLaw::Sorted, BeliefLaw::Reachable,
                                           BeliefLaw::BoundaryHeavy};
    chosen = strata[index % 4];
  }
  inst.stratum = to_string(chosen);

  const TransitionModel model(inst.p01, inst.p11);
  const double star = model.stationary().value_or(0.5);
  inst.belief.resize(inst.n);
  for (auto& w : inst.belief) {
    switch (chosen) {
      case BeliefLaw::Uniform:
      case BeliefLaw::Sorted:
      case BeliefLaw::Mixed:
        w = rng.uniform();
        break;
      case BeliefLaw::Reachable: {
        const auto origin = rng.below(3);
        const double base = origin == 0 ? inst.p01 : origin == 1 ? inst.p11 : rng.uniform();
        w = tau_power(base, static_cast<std::uint32_t>(rng.below(4)), model);
        break;
      }
      case BeliefLaw::BoundaryHeavy: {
        const double choices[] = {0.0, inst.p01, star, inst.p11, 1.0};
        w = choices[rng.below(5)];
        break;
      }
    }
  }
  if (chosen == BeliefLaw::Sorted) std::sort(inst.belief.begin(), inst.belief.end());
  return inst;
}

// ---------------------------------------------------------------------------
// driver

namespace {

void record(CheckResult& out, const std::string& property, const Instance& inst, double lhs, double rhs,
            double gap, double tol, const std::string& detail = {}) {
  auto& tally = out.properties[property];
  ++tally.assertions;
  tally.worst_gap = std::max(tally.worst_gap, gap);
  if (gap > tol) {
    ++tally.violations;
    out.violations.push_back({property, inst, detail, lhs, rhs, gap, tol});
  }
}

using InstanceCheck = std::function<void(const Instance&, CheckResult&)>;

CheckResult drive(const std::string& name, const InstanceSampler& sampler, std::size_t count,
                  const VerifyOptions& opts, const InstanceCheck& check) {
  sampler.validate();
  std::vector<CheckResult> partial(count);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < count; i += stride) {
      const Instance inst = sampler.sample(i);
      try {
        check(inst, partial[i]);
      } catch (const std::exception& e) {
        partial[i].errors.push_back("instance " + std::to_string(i) + ": " + e.what());
      }
    }
  };
  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  CheckResult out;
  out.check = name;
  out.instances = count;
  for (auto& p : partial) {
    for (const auto& [id, t] : p.properties) {
      auto& dst = out.properties[id];
      dst.assertions += t.assertions;
      dst.violations += t.violations;
      dst.worst_gap = std::max(dst.worst_gap, t.worst_gap);
    }
    for (auto& v : p.violations) out.violations.push_back(std::move(v));
    for (auto& e : p.errors) out.errors.push_back(std::move(e));
  }
  return out;
}

std::string join_actions(const std::vector<ActionSet>& actions) {
  std::string s;
  for (const auto& a : actions) s += (s.empty() ? "" : " ") + a.str();
  return s;
}

// Sorted instance belief tagged by position; extra slots are appended by callers.
struct TaggedList {
  std::vector<double> values;
  std::vector<Provenance> tags;

  BeliefVector belief() const { return BeliefVector(values, tags); }
  void push(double v, std::uint32_t slot) {
    values.push_back(v);
    tags.push_back(Provenance::initial(slot));
  }
};

std::vector<double> sorted_belief(const Instance& inst) {
  auto w = inst.belief;
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// checks

CheckResult check_greedy_optimality(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts) {
  return drive("optimality", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    const auto model = inst.model();
    const auto horizon = inst.horizon();
    OptimalSolver solver(model, horizon, inst.k, opts.solver);
    GreedyValueSolver greedy(model, horizon, inst.k, opts.solver);
    const BeliefVector root = BeliefVector::initial(inst.belief);

    // value level
    const double v_opt = solver.value(root, 1);
    const double v_greedy = greedy.greedy_value(root, 1);
    record(out, "optimality.value", inst, v_greedy, v_opt, std::abs(v_greedy - v_opt), kValueTolerance);

    // first action: greedy choice followed by optimal play beats every alternative
    const auto root_solve = solver.solve(root, 1);
    const ActionSet z = greedy_action(root, inst.k);
    const double q_greedy = solver.action_value(root, 1, z);
    for (const auto& [a, q] : root_solve.action_values)
      record(out, "optimality.first_action", inst, q_greedy, q, q - q_greedy, kValueTolerance,
             "greedy " + z.str() + " vs " + a.str());

    // every state reachable under greedy: each tie-equivalent greedy set is a maximizer
    std::set<detail::MemoKey> visited;
    std::function<void(const BeliefVector&, int)> walk = [&](const BeliefVector& b, int t) {
      detail::MemoKey key{static_cast<std::uint64_t>(t)};
      for (const auto& p : b.provenance()) key.push_back(p.key());
      if (!visited.insert(std::move(key)).second) return;
      const auto res = solver.solve(b, t);
      for (const auto& tied : tied_greedy_actions(b, inst.k)) {
        // membership in best_actions is exactly q_tied >= value - tie_tolerance
        double q_tied = 0.0;
        for (const auto& [a, q] : res.action_values)
          if (a == tied) q_tied = q;
        const bool member = std::find(res.best_actions.begin(), res.best_actions.end(), tied) !=
                            res.best_actions.end();
        record(out, "optimality.reachable", inst, q_tied, res.value, member ? 0.0 : res.value - q_tied,
               member ? kValueTolerance : 0.0,
               "t=" + std::to_string(t) + " greedy " + tied.str() + " best " + join_actions(res.best_actions));
      }
      if (t == inst.T) return;
      const ActionSet act = greedy_action(b, inst.k);
      for (const auto& o : enumerate_outcomes(beliefs_on(b, act)))
        if (o.probability > 0.0) walk(update_belief(b, act, o, model), t + 1);
    };
    walk(root, 1);
  });
}

CheckResult check_rotation(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts) {
  return drive("rotation", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    GreedyValueSolver w(inst.model(), inst.horizon(), inst.k, opts.solver);
    const auto sorted = sorted_belief(inst);
    TaggedList base, rotated;
    for (std::size_t i = 0; i < inst.n; ++i) base.push(sorted[i], static_cast<std::uint32_t>(i));
    for (std::size_t i = 1; i < inst.n; ++i) rotated.push(sorted[i], static_cast<std::uint32_t>(i));
    rotated.push(sorted[0], 0);
    for (int t = 1; t <= inst.T; ++t) {
      const double lhs = 1.0 + w.w_value(rotated.belief(), t);
      const double rhs = w.w_value(base.belief(), t);
      record(out, "rotation.bound", inst, lhs, rhs, rhs - lhs, kValueTolerance, "t=" + std::to_string(t));
    }
  });
}

CheckResult check_swap_order(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts) {
  return drive("swap_order", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    GreedyValueSolver w(inst.model(), inst.horizon(), inst.k, opts.solver);
    const auto sorted = sorted_belief(inst);
    const std::size_t n = inst.n;
    if (n < 2) return;
    CounterRng rng(inst.seed, inst.index, 0xb0);
    const bool adjacent_pair = inst.index % 2 == 0;
    for (std::size_t j = 0; j + 2 <= n; ++j) {
      // (y, x) replaces positions j+1, j+2 (one-based)
      double x = sorted[j + 1], y = sorted[j];
      auto xs = static_cast<std::uint32_t>(j + 1), ys = static_cast<std::uint32_t>(j);
      if (!adjacent_pair) {
        const double u = rng.uniform(), v = rng.uniform();
        x = std::max(u, v);
        y = std::min(u, v);
        xs = static_cast<std::uint32_t>(n + 2 * j);
        ys = static_cast<std::uint32_t>(n + 2 * j + 1);
      }
      TaggedList yx, xy;
      for (std::size_t i = 0; i < j; ++i) {
        yx.push(sorted[i], static_cast<std::uint32_t>(i));
        xy.push(sorted[i], static_cast<std::uint32_t>(i));
      }
      yx.push(y, ys);
      yx.push(x, xs);
      xy.push(x, xs);
      xy.push(y, ys);
      for (std::size_t i = j + 2; i < n; ++i) {
        yx.push(sorted[i], static_cast<std::uint32_t>(i));
        xy.push(sorted[i], static_cast<std::uint32_t>(i));
      }
      for (int t = 1; t <= inst.T; ++t) {
        const double lhs = w.w_value(yx.belief(), t);
        const double rhs = w.w_value(xy.belief(), t);
        record(out, "swap_order.bound", inst, lhs, rhs, rhs - lhs, kValueTolerance,
               "j=" + std::to_string(j) + " t=" + std::to_string(t) + (adjacent_pair ? " adjacent" : " free"));
      }
    }
  });
}

CheckResult check_first_action_reduction(const InstanceSampler& sampler, std::size_t count,
                                   const VerifyOptions& opts) {
  return drive("reduction", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    const auto model = inst.model();
    const auto horizon = inst.horizon();
    GreedyValueSolver w(model, horizon, inst.k, opts.solver);
    const auto sorted = sorted_belief(inst);
    TaggedList base;
    for (std::size_t i = 0; i < inst.n; ++i) base.push(sorted[i], static_cast<std::uint32_t>(i));
    const auto actions = enumerate_actions(inst.n, inst.k);
    const bool small = inst.n <= 5 && inst.T <= 5;
    const GreedyPolicy greedy(inst.k);

    for (int t = 1; t <= inst.T; ++t) {
      const double w_sorted = w.w_value(base.belief(), t);
      for (const auto& a : actions) {
        TaggedList list;
        for (std::size_t i = 0; i < inst.n; ++i)
          if (!a.contains(i)) list.push(sorted[i], static_cast<std::uint32_t>(i));
        for (std::size_t i : a) list.push(sorted[i], static_cast<std::uint32_t>(i));
        const double w_a = w.w_value(list.belief(), t);
        const std::string where = "t=" + std::to_string(t) + " a=" + a.str();
        record(out, "reduction.bound", inst, w_a, w_sorted, w_a - w_sorted, kValueTolerance, where);
        if (a.indices().front() == inst.n - inst.k)  // the greedy (top-k) set
          record(out, "reduction.greedy_first", inst, w_a, w_sorted, std::abs(w_a - w_sorted), kValueTolerance,
                 where);
        if (small && t == 1) {
          // W(complement, a) is the value of a followed by greedy play
          const double exact = evaluate_policy(greedy, BeliefVector(sorted), 1, model, horizon, inst.k, a,
                                               opts.solver);
          record(out, "reduction.continuation", inst, w_a, exact, std::abs(w_a - exact), kValueTolerance, where);
        }
      }
    }
  });
}

CheckResult check_affinity(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts) {
  return drive("affinity", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    const auto model = inst.model();
    const auto horizon = inst.horizon();
    CounterRng rng(inst.seed, inst.index, 0xaf);
    const int t = uniform_int(rng, 1, inst.T);
    const std::string when = "t=" + std::to_string(t);

    // three-point collinearity in one coordinate
    auto w = inst.belief;
    const std::size_t i = rng.below(inst.n);
    auto at = [&](double v) {
      w[i] = v;
      return w_value(BeliefVector(w), t, model, horizon, inst.k, opts.solver);
    };
    const double w0 = at(0.0), w1 = at(1.0), wh = at(0.5);
    const double u = rng.uniform();
    const double wu = at(u);
    const std::string coord = when + " i=" + std::to_string(i + 1);
    record(out, "affinity.midpoint", inst, wh, 0.5 * (w0 + w1), std::abs(wh - 0.5 * (w0 + w1)),
           kIdentityTolerance, coord);
    record(out, "affinity.collinear", inst, wu, (1.0 - u) * w0 + u * w1, std::abs(wu - ((1.0 - u) * w0 + u * w1)),
           kIdentityTolerance, coord + " u=" + std::to_string(u));

    // swap identity at a random adjacent pair
    if (inst.n >= 2) {
      const std::size_t j = rng.below(inst.n - 1);
      const double x = rng.uniform(), y = rng.uniform();
      const std::vector<double> prefix(inst.belief.begin(), inst.belief.begin() + static_cast<std::ptrdiff_t>(j));
      const std::vector<double> suffix(inst.belief.begin() + static_cast<std::ptrdiff_t>(j) + 2, inst.belief.end());
      const auto d = affine_swap_delta(prefix, x, y, suffix, t, model, horizon, inst.k, opts.solver);
      record(out, "affinity.swap", inst, d.lhs, d.rhs, std::abs(d.lhs - d.rhs), kIdentityTolerance,
             when + " j=" + std::to_string(j));
    }

    // outcome probabilities over the sensed block sum to one
    const std::vector<double> sensed(inst.belief.end() - static_cast<std::ptrdiff_t>(inst.k), inst.belief.end());
    double total = 0.0;
    for (const auto& o : enumerate_outcomes(sensed)) total += o.probability;
    record(out, "outcome.normalization", inst, total, 1.0, std::abs(total - 1.0), kProbabilityTolerance);
  });
}

CheckResult scan_negative_regime(const InstanceSampler& sampler, std::size_t count, const VerifyOptions& opts) {
  return drive("negative_scan", sampler, count, opts, [&](const Instance& inst, CheckResult& out) {
    const auto model = inst.model();
    const auto horizon = inst.horizon();
    OptimalSolver solver(model, horizon, inst.k, opts.solver);
    const BeliefVector root = BeliefVector::initial(inst.belief);
    const auto res = solver.solve(root, 1);
    const double v_greedy = evaluate_policy(GreedyPolicy(inst.k), root, 1, model, horizon, inst.k,
                                            std::nullopt, opts.solver);
    record(out, "negative.greedy_gap", inst, v_greedy, res.value, res.value - v_greedy, kValueTolerance,
           "greedy " + greedy_action(root, inst.k).str() + " best " + join_actions(res.best_actions));
  });
}

// ---------------------------------------------------------------------------
// reporting

namespace {

nlohmann::ordered_json instance_json(const Instance& inst) {
  nlohmann::ordered_json j;
  j["seed"] = inst.seed;
  j["index"] = inst.index;
  j["n"] = inst.n;
  j["k"] = inst.k;
  j["T"] = inst.T;
  j["beta"] = inst.beta;
  j["p01"] = inst.p01;
  j["p11"] = inst.p11;
  j["belief"] = inst.belief;
  j["stratum"] = inst.stratum;
  return j;
}

}  // namespace

std::string violation_json(const ViolationReport& v) {
  nlohmann::ordered_json j;
  j["property"] = v.property;
  j["instance"] = instance_json(v.instance);
  j["detail"] = v.detail;
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["gap"] = v.gap;
  j["tolerance"] = v.tolerance;
  return j.dump();
}

void write_violations_jsonl(std::ostream& os, const std::vector<ViolationReport>& violations) {
  for (const auto& v : violations) os << violation_json(v) << '\n';
}

void write_summary_table(std::ostream& os, const std::vector<CheckResult>& results) {
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-24s %9s %11s %10s %7s %12s\n", "check", "property", "instances",
                "assertions", "violations", "errors", "worst_gap");
  os << line;
  for (const auto& r : results) {
    for (const auto& [id, t] : r.properties) {
      std::snprintf(line, sizeof line, "%-14s %-24s %9zu %11zu %10zu %7zu %12.3e\n", r.check.c_str(), id.c_str(),
                    r.instances, t.assertions, t.violations, r.errors.size(), t.worst_gap);
      os << line;
    }
    if (r.properties.empty()) {
      std::snprintf(line, sizeof line, "%-14s %-24s %9zu %11d %10d %7zu %12s\n", r.check.c_str(), "-", r.instances,
                    0, 0, r.errors.size(), "-");
      os << line;
    }
  }
}

}  // namespace osa
