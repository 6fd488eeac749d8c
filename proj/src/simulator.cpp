#include "osa/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "osa/errors.hpp"

namespace osa {

void SimConfig::validate() const {
  if (replications < 1) throw DomainError("replications must be >= 1");
  if (k < 1 || k > n()) throw DomainError("need 1 <= k <= n");
}

RunRecord simulate_replication(const SimConfig& config, Policy& policy, std::size_t replication,
                               bool keep_steps) {
  const std::size_t n = config.n();
  CounterRng nature(config.seed, replication, 0);
  policy.reset(CounterRng(config.seed, replication, 1));

  std::vector<std::uint8_t> hidden(n);
  for (std::size_t i = 0; i < n; ++i) hidden[i] = nature.bernoulli(config.initial_belief[i]) ? 1 : 0;

  RunRecord run;
  run.replication = replication;
  BeliefVector belief = config.initial_belief;
  double discount = 1.0;
  for (int t = 1; t <= config.horizon.T; ++t) {
    const ActionSet action = policy.select(belief, t);
    action.validate(n, config.k);

    OutcomeRealization outcome;
    outcome.bits.reserve(action.size());
    for (std::size_t i : action) outcome.bits.push_back(hidden[i]);
    const auto on_action = beliefs_on(belief, action);
    outcome.probability = outcome_probability(on_action, outcome.bits);
    const int reward = static_cast<int>(outcome.goods());
    run.total += discount * reward;

    if (keep_steps) {
      StepRecord step;
      step.t = t;
      step.hidden = hidden;
      step.action = action;
      step.observation = outcome.bits;
      step.reward = reward;
      step.discounted_cumulative = run.total;
      run.steps.push_back(std::move(step));
    }

    policy.observe(action, outcome);
    belief = update_belief(belief, action, outcome, config.model);
    for (std::size_t i = 0; i < n; ++i) {
      const double p_good = hidden[i] ? config.model.p11() : config.model.p01();
      hidden[i] = nature.bernoulli(p_good) ? 1 : 0;
    }
    discount *= config.horizon.beta;
  }
  return run;
}

SimSummary summarize(std::vector<double> values) {
  SimSummary s;
  s.replications = values.size();
  if (values.empty()) return s;
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double y = v - comp;
    const double tsum = sum + y;
    comp = (tsum - sum) - y;
    sum = tsum;
  }
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0, c2 = 0.0;
    for (double v : values) {
      const double d = v - s.mean;
      const double y = d * d - c2;
      const double tsum = ss + y;
      c2 = (tsum - ss) - y;
      ss = tsum;
    }
    s.variance = ss / static_cast<double>(values.size() - 1);
    s.standard_error = std::sqrt(s.variance / static_cast<double>(values.size()));
  }
  s.totals = std::move(values);
  return s;
}

namespace {

unsigned worker_count(unsigned requested, std::size_t work) {
  unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, work));
}

// Runs body(worker_policies, r) for every replication; each worker owns its clones.
template <typename Body>
void for_replications(const SimConfig& config, std::vector<const Policy*> policies, Body body) {
  const unsigned workers = worker_count(config.threads, config.replications);
  auto work = [&](unsigned w) {
    std::vector<std::unique_ptr<Policy>> own;
    for (const Policy* p : policies) own.push_back(p->clone());
    for (std::size_t r = w; r < config.replications; r += workers) body(own, r);
  };
  if (workers <= 1) {
    work(0);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
}

}  // namespace

SimSummary simulate(const SimConfig& config, const Policy& policy) {
  config.validate();
  std::vector<double> totals(config.replications);
  std::vector<RunRecord> traces(std::min(config.trace_replications, config.replications));
  for_replications(config, {&policy}, [&](auto& own, std::size_t r) {
    const bool keep = r < traces.size();
    RunRecord run = simulate_replication(config, *own[0], r, keep);
    totals[r] = run.total;
    if (keep) traces[r] = std::move(run);
  });
  SimSummary s = summarize(std::move(totals));
  s.traces = std::move(traces);
  return s;
}

PairedSummary common_random_numbers_compare(const SimConfig& config, const Policy& a, const Policy& b) {
  config.validate();
  std::vector<double> ta(config.replications), tb(config.replications), diff(config.replications);
  for_replications(config, {&a, &b}, [&](auto& own, std::size_t r) {
    ta[r] = simulate_replication(config, *own[0], r, false).total;
    tb[r] = simulate_replication(config, *own[1], r, false).total;
    diff[r] = ta[r] - tb[r];
  });
  PairedSummary out;
  out.a = summarize(std::move(ta));
  out.b = summarize(std::move(tb));
  out.difference = summarize(std::move(diff));
  return out;
}

void write_traces(std::ostream& os, const std::vector<RunRecord>& runs, const std::string& policy) {
  auto bits = [](const std::vector<std::uint8_t>& v) {
    std::string s;
    for (auto b : v) s += b ? '1' : '0';
    return s;
  };
  nlohmann::ordered_json header;
  header["schema"] = kTraceSchema;
  header["policy"] = policy;
  header["fields"] = {"rep", "t", "hidden", "action", "obs", "reward", "discounted_cumulative"};
  os << header.dump() << '\n';
  for (const auto& run : runs) {
    for (const auto& step : run.steps) {
      nlohmann::ordered_json rec;
      rec["rep"] = run.replication;
      rec["t"] = step.t;
      rec["hidden"] = bits(step.hidden);
      rec["action"] = step.action.to_one_based();
      rec["obs"] = bits(step.observation);
      rec["reward"] = step.reward;
      rec["discounted_cumulative"] = step.discounted_cumulative;
      os << rec.dump() << '\n';
    }
  }
}

}  // namespace osa
