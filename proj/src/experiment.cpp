#include "osa/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "osa/errors.hpp"
#include "osa/policy.hpp"
#include "osa/simulator.hpp"

namespace osa {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// parsing

namespace {

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Solve: return "solve";
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Compare: return "compare";
    case ExperimentKind::Verify: return "verify";
  }
  return "?";
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"optimality", "rotation", "swap_order",
                                              "reduction",   "affinity", "negative_scan"};
  return names;
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void reject_unknown(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
}

double get_probability(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail("missing '" + std::string(key) + "' in " + where);
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) fail(where + "." + key + " must lie in [0,1]");
  return x;
}

template <typename T>
T get_count(const ordered_json& v, const std::string& what, T min_value) {
  if (!v.is_number_integer()) fail(what + " must be an integer");
  const auto x = v.get<long long>();
  if (x < static_cast<long long>(min_value)) fail(what + " must be >= " + std::to_string(min_value));
  return static_cast<T>(x);
}

Range get_range(const ordered_json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(what + " must be a [min, max] pair");
  Range r{v[0].get<double>(), v[1].get<double>()};
  if (r.hi < r.lo) fail(what + " has max < min");
  return r;
}

template <typename T>
std::vector<T> get_axis(const ordered_json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) fail(what + " must be a non-empty array");
  std::vector<T> out;
  for (const auto& x : v) {
    if constexpr (std::is_floating_point_v<T>) {
      if (!x.is_number()) fail(what + " entries must be numbers");
    } else {
      if (!x.is_number_integer()) fail(what + " entries must be integers");
    }
    out.push_back(x.get<T>());
  }
  return out;
}

void parse_verify(const ordered_json& j, VerifySettings& v) {
  reject_unknown(j, {"checks", "counts", "dp_envelope", "w_envelope", "beta", "belief_law"}, "verify");
  if (j.contains("checks")) {
    v.checks.clear();
    if (!j["checks"].is_array()) fail("verify.checks must be an array");
    for (const auto& c : j["checks"]) {
      if (!c.is_string()) fail("verify.checks entries must be strings");
      const auto name = c.get<std::string>();
      if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
        fail("unknown check '" + name + "'");
      v.checks.push_back(name);
    }
  }
  if (j.contains("counts")) {
    const auto& c = j["counts"];
    reject_unknown(c, {"optimality", "swap", "reduction", "affinity", "negative_scan"}, "verify.counts");
    if (c.contains("optimality")) v.optimality = get_count<std::size_t>(c["optimality"], "counts.optimality", 0);
    if (c.contains("swap")) v.swap = get_count<std::size_t>(c["swap"], "counts.swap", 0);
    if (c.contains("reduction")) v.reduction = get_count<std::size_t>(c["reduction"], "counts.reduction", 0);
    if (c.contains("affinity")) v.affinity = get_count<std::size_t>(c["affinity"], "counts.affinity", 0);
    if (c.contains("negative_scan"))
      v.negative_scan = get_count<std::size_t>(c["negative_scan"], "counts.negative_scan", 0);
  }
  auto envelope = [&](const char* key, Range& n, Range& T) {
    if (!j.contains(key)) return;
    const auto& e = j[key];
    reject_unknown(e, {"n", "T"}, std::string("verify.") + key);
    if (e.contains("n")) n = get_range(e["n"], std::string(key) + ".n");
    if (e.contains("T")) T = get_range(e["T"], std::string(key) + ".T");
    if (n.lo < 2 || n.hi > 10) fail(std::string(key) + ".n must lie within [2, 10]");
    if (T.lo < 1 || T.hi > 12) fail(std::string(key) + ".T must lie within [1, 12]");
  };
  envelope("dp_envelope", v.dp_n, v.dp_T);
  envelope("w_envelope", v.w_n, v.w_T);
  if (j.contains("beta")) {
    v.beta = get_range(j["beta"], "verify.beta");
    if (v.beta.lo < 0.0 || v.beta.hi > 1.0) fail("verify.beta must lie within [0,1]");
  }
  if (j.contains("belief_law")) {
    if (!j["belief_law"].is_string()) fail("verify.belief_law must be a string");
    try {
      v.belief_law = parse_belief_law(j["belief_law"].get<std::string>());
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"kind", "model", "horizon", "n", "k", "belief", "policies", "fixed_set", "replications", "seed",
                  "threads", "max_memo", "timing", "traces", "trace_replications", "out_dir", "verify", "grid"},
                 "config");

  ExperimentConfig cfg;
  if (!j.contains("kind") || !j["kind"].is_string()) fail("config needs a string 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "solve") cfg.kind = ExperimentKind::Solve;
  else if (kind == "simulate") cfg.kind = ExperimentKind::Simulate;
  else if (kind == "compare") cfg.kind = ExperimentKind::Compare;
  else if (kind == "verify") cfg.kind = ExperimentKind::Verify;
  else fail("unknown experiment kind '" + kind + "'");

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) cfg.threads = get_count<unsigned>(j["threads"], "threads", 0u);
  if (j.contains("max_memo")) cfg.max_memo = get_count<std::size_t>(j["max_memo"], "max_memo", 1);
  if (j.contains("replications")) cfg.replications = get_count<std::size_t>(j["replications"], "replications", 1);
  if (j.contains("trace_replications"))
    cfg.trace_replications = get_count<std::size_t>(j["trace_replications"], "trace_replications", 0);
  for (const char* flag : {"timing", "traces"}) {
    if (!j.contains(flag)) continue;
    if (!j[flag].is_boolean()) fail(std::string(flag) + " must be true or false");
    (std::string(flag) == "timing" ? cfg.timing : cfg.traces) = j[flag].get<bool>();
  }
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string() || j["out_dir"].get<std::string>().empty())
      fail("out_dir must be a non-empty string");
    cfg.out_dir = j["out_dir"].get<std::string>();
  }

  if (cfg.kind == ExperimentKind::Verify) {
    for (const char* key : {"model", "horizon", "n", "k", "belief", "policies", "fixed_set", "grid"})
      if (j.contains(key)) fail(std::string("'") + key + "' does not apply to a verify experiment");
    if (j.contains("verify")) parse_verify(j["verify"], cfg.verify);
    return cfg;
  }
  if (j.contains("verify")) fail("'verify' settings only apply to kind 'verify'");

  if (!j.contains("model")) fail("config needs 'model'");
  reject_unknown(j["model"], {"p01", "p11"}, "model");
  cfg.p01 = get_probability(j["model"], "p01", "model");
  cfg.p11 = get_probability(j["model"], "p11", "model");

  if (!j.contains("horizon")) fail("config needs 'horizon'");
  reject_unknown(j["horizon"], {"T", "beta"}, "horizon");
  if (!j["horizon"].contains("T")) fail("missing 'T' in horizon");
  cfg.T = get_count<int>(j["horizon"]["T"], "horizon.T", 1);
  cfg.beta = get_probability(j["horizon"], "beta", "horizon");

  if (!j.contains("n") || !j.contains("k")) fail("config needs 'n' and 'k'");
  cfg.n = get_count<std::size_t>(j["n"], "n", 1);
  cfg.k = get_count<std::size_t>(j["k"], "k", 1);
  if (cfg.k > cfg.n) fail("k must not exceed n");
  if (cfg.n > 16) fail("n above 16 is not supported");

  if (!j.contains("belief")) fail("config needs 'belief' (array or \"stationary\")");
  const auto& b = j["belief"];
  if (b.is_string()) {
    if (b.get<std::string>() != "stationary") fail("the only named belief preset is \"stationary\"");
    cfg.stationary = true;
  } else if (b.is_array()) {
    if (b.size() != cfg.n) fail("belief has " + std::to_string(b.size()) + " entries, expected n");
    for (const auto& x : b) {
      if (!x.is_number()) fail("belief entries must be numbers");
      const double w = x.get<double>();
      if (!(w >= 0.0 && w <= 1.0)) fail("belief entries must lie in [0,1]");
      cfg.belief.push_back(w);
    }
  } else {
    fail("belief must be an array or \"stationary\"");
  }

  if (j.contains("policies")) {
    if (!j["policies"].is_array()) fail("policies must be an array of names");
    for (const auto& p : j["policies"]) {
      if (!p.is_string() || !is_policy_name(p.get<std::string>()))
        fail("unknown policy " + p.dump() + " (greedy, optimal, ordered-list, round-robin, fixed, random)");
      cfg.policies.push_back(p.get<std::string>());
    }
  } else {
    if (cfg.kind == ExperimentKind::Solve) cfg.policies = {"optimal", "greedy"};
    else if (cfg.kind == ExperimentKind::Simulate) cfg.policies = {"greedy"};
    else fail("compare needs 'policies' with exactly two names");
  }
  if (cfg.policies.empty()) fail("policies must not be empty");
  if (cfg.kind == ExperimentKind::Compare && cfg.policies.size() != 2)
    fail("compare needs exactly two policies");
  if (cfg.kind == ExperimentKind::Solve)
    for (const auto& p : cfg.policies)
      if (p == "random") fail("policy 'random' has no analytic value; use simulate");

  if (j.contains("fixed_set")) cfg.fixed_set = get_axis<std::size_t>(j["fixed_set"], "fixed_set");
  const bool wants_fixed = std::find(cfg.policies.begin(), cfg.policies.end(), "fixed") != cfg.policies.end();
  if (wants_fixed) {
    if (cfg.fixed_set.size() != cfg.k) fail("fixed_set must list exactly k channels");
    std::set<std::size_t> seen;
    for (auto i : cfg.fixed_set) {
      if (i < 1 || i > cfg.n) fail("fixed_set channel out of range 1..n");
      if (!seen.insert(i).second) fail("fixed_set repeats a channel");
    }
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, {"p01", "p11", "beta", "k", "T"}, "grid");
    if (g.contains("p01")) cfg.grid.p01 = get_axis<double>(g["p01"], "grid.p01");
    if (g.contains("p11")) cfg.grid.p11 = get_axis<double>(g["p11"], "grid.p11");
    if (g.contains("beta")) cfg.grid.beta = get_axis<double>(g["beta"], "grid.beta");
    if (g.contains("k")) cfg.grid.k = get_axis<std::size_t>(g["k"], "grid.k");
    if (g.contains("T")) cfg.grid.T = get_axis<int>(g["T"], "grid.T");
    for (const auto* axis : {&cfg.grid.p01, &cfg.grid.p11, &cfg.grid.beta})
      for (double x : *axis)
        if (!(x >= 0.0 && x <= 1.0)) fail("grid probabilities and discounts must lie in [0,1]");
    for (auto k : cfg.grid.k)
      if (k < 1 || k > cfg.n) fail("grid.k entries must lie in 1..n");
    for (auto T : cfg.grid.T)
      if (T < 1) fail("grid.T entries must be >= 1");
    if (cfg.grid.empty()) fail("grid declares no axes");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["kind"] = kind_name(kind);
  if (kind != ExperimentKind::Verify) {
    j["model"] = {{"p01", p01}, {"p11", p11}};
    j["horizon"] = {{"T", T}, {"beta", beta}};
    j["n"] = n;
    j["k"] = k;
    if (stationary) j["belief"] = "stationary";
    else j["belief"] = belief;
    j["policies"] = policies;
    if (!fixed_set.empty()) j["fixed_set"] = fixed_set;
    if (!grid.empty()) {
      ordered_json g = ordered_json::object();
      if (!grid.p01.empty()) g["p01"] = grid.p01;
      if (!grid.p11.empty()) g["p11"] = grid.p11;
      if (!grid.beta.empty()) g["beta"] = grid.beta;
      if (!grid.k.empty()) g["k"] = grid.k;
      if (!grid.T.empty()) g["T"] = grid.T;
      j["grid"] = g;
    }
  } else {
    ordered_json v;
    v["checks"] = verify.checks;
    v["counts"] = {{"optimality", verify.optimality},
                   {"swap", verify.swap},
                   {"reduction", verify.reduction},
                   {"affinity", verify.affinity},
                   {"negative_scan", verify.negative_scan}};
    v["dp_envelope"] = {{"n", {verify.dp_n.lo, verify.dp_n.hi}}, {"T", {verify.dp_T.lo, verify.dp_T.hi}}};
    v["w_envelope"] = {{"n", {verify.w_n.lo, verify.w_n.hi}}, {"T", {verify.w_T.lo, verify.w_T.hi}}};
    v["beta"] = {verify.beta.lo, verify.beta.hi};
    v["belief_law"] = to_string(verify.belief_law);
    j["verify"] = v;
  }
  j["replications"] = replications;
  j["seed"] = seed;
  j["threads"] = threads;
  j["max_memo"] = max_memo;
  j["timing"] = timing;
  j["traces"] = traces;
  j["trace_replications"] = trace_replications;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

void CliOverrides::apply(ExperimentConfig& cfg) const {
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (out_dir) cfg.out_dir = *out_dir;
  if (max_memo) {
    if (*max_memo < 1) fail("--max-memo must be >= 1");
    cfg.max_memo = *max_memo;
  }
  if (traces) cfg.traces = *traces;
}

std::vector<double> initial_belief(double p01, double p11, std::size_t n, const ExperimentConfig& cfg,
                                   std::ostream& log) {
  if (!cfg.stationary) return cfg.belief;
  const auto star = TransitionModel(p01, p11).stationary();
  if (!star) {
    log << "warning: p11 = 1 and p01 = 0 make every belief stationary; using 0.5\n";
    return std::vector<double>(n, 0.5);
  }
  return std::vector<double>(n, *star);
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// running

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start, bool timing) {
  if (!timing) return 0.0;
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Artifacts {
  fs::path dir;
  std::vector<std::string> names;

  std::ofstream open(const std::string& name) {
    names.push_back(name);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  }
};

void write_metadata(Artifacts& art, const ExperimentConfig& cfg, const std::string& command,
                    const std::string& table_schema, double wall) {
  ordered_json meta;
  meta["schema"] = kMetadataSchema;
  meta["tool"] = "osa";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["kind"] = kind_name(cfg.kind);
  meta["seed"] = cfg.seed;
  meta["table_schema"] = table_schema;
  meta["artifacts"] = art.names;
  meta["config"] = ordered_json::parse(cfg.to_json());
  meta["wall_time_s"] = wall;
  auto out = art.open("metadata.json");
  out << meta.dump(2) << '\n';
}

struct ResultRow {
  std::string instance_id;
  std::string policy;
  double analytic = NAN;
  double sim_mean = NAN;
  double std_error = NAN;
  double runtime = 0.0;
};

void write_results(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "instance_id,policy,analytic_value,simulated_mean,std_error,runtime_s\n";
  for (const auto& r : rows)
    os << r.instance_id << ',' << r.policy << ',' << format_number(r.analytic) << ',' << format_number(r.sim_mean)
       << ',' << format_number(r.std_error) << ',' << format_number(r.runtime) << '\n';
}

PolicyParams policy_params(const ExperimentConfig& cfg, const TransitionModel& model) {
  PolicyParams p;
  p.model = model;
  p.horizon = HorizonSpec(cfg.T, cfg.beta);
  p.n = cfg.n;
  p.k = cfg.k;
  if (!cfg.fixed_set.empty()) p.fixed_set = ActionSet::one_based(cfg.fixed_set);
  p.seed = cfg.seed;
  p.solver.max_memo = cfg.max_memo;
  return p;
}

double analytic_value(const std::string& name, const Policy& policy, const BeliefVector& belief,
                      const ExperimentConfig& cfg, const TransitionModel& model) {
  const HorizonSpec horizon(cfg.T, cfg.beta);
  SolverOptions opts;
  opts.max_memo = cfg.max_memo;
  if (name == "optimal") {
    OptimalSolver solver(model, horizon, cfg.k, opts);
    return solver.value(belief, 1);
  }
  if (!policy.deterministic()) return NAN;
  return evaluate_policy(policy, belief, 1, model, horizon, cfg.k, std::nullopt, opts);
}

int run_verify(const ExperimentConfig& cfg, Artifacts& art, std::ostream& log) {
  const auto& v = cfg.verify;
  VerifyOptions opts;
  opts.solver.max_memo = cfg.max_memo;
  opts.threads = cfg.threads;

  auto sampler = [&](std::size_t check_id, Range n, Range T, Regime regime) {
    InstanceSampler s;
    s.n_min = static_cast<std::size_t>(n.lo);
    s.n_max = static_cast<std::size_t>(n.hi);
    s.T_min = static_cast<int>(T.lo);
    s.T_max = static_cast<int>(T.hi);
    s.beta_min = v.beta.lo;
    s.beta_max = v.beta.hi;
    s.regime = regime;
    s.law = v.belief_law;
    s.seed = CounterRng(cfg.seed, check_id, 0x7e)();
    return s;
  };

  std::vector<CheckResult> results;
  std::vector<ViolationReport> violations, findings;
  for (const auto& name : v.checks) {
    CheckResult r;
    if (name == "optimality") r = check_greedy_optimality(sampler(1, v.dp_n, v.dp_T, Regime::Positive), v.optimality, opts);
    else if (name == "rotation") r = check_rotation(sampler(2, v.w_n, v.w_T, Regime::Positive), v.swap, opts);
    else if (name == "swap_order") r = check_swap_order(sampler(3, v.w_n, v.w_T, Regime::Positive), v.swap, opts);
    else if (name == "reduction") r = check_first_action_reduction(sampler(4, v.w_n, v.w_T, Regime::Positive), v.reduction, opts);
    else if (name == "affinity") r = check_affinity(sampler(5, v.w_n, v.w_T, Regime::Any), v.affinity, opts);
    else if (name == "negative_scan")
      r = scan_negative_regime(sampler(6, v.dp_n, v.dp_T, Regime::Negative), v.negative_scan, opts);
    auto& sink = name == "negative_scan" ? findings : violations;
    sink.insert(sink.end(), r.violations.begin(), r.violations.end());
    results.push_back(std::move(r));
  }

  {
    auto out = art.open("results.csv");
    out << "check,property,instances,assertions,violations,errors,worst_gap\n";
    for (const auto& r : results)
      for (const auto& [id, t] : r.properties)
        out << r.check << ',' << id << ',' << r.instances << ',' << t.assertions << ',' << t.violations << ','
            << r.errors.size() << ',' << format_number(t.worst_gap) << '\n';
  }
  {
    auto out = art.open("violations.jsonl");
    write_violations_jsonl(out, violations);
  }
  if (std::find(v.checks.begin(), v.checks.end(), "negative_scan") != v.checks.end()) {
    auto out = art.open("negative_scan.jsonl");
    write_violations_jsonl(out, findings);
  }
  {
    auto out = art.open("summary.txt");
    write_summary_table(out, results);
  }
  write_summary_table(log, results);

  bool errors = false;
  for (const auto& r : results) {
    for (const auto& e : r.errors) log << r.check << ": " << e << '\n';
    errors |= !r.errors.empty();
  }
  if (!violations.empty()) return kExitViolations;
  if (errors) return kExitResourceCap;
  return kExitOk;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto start = Clock::now();
  Artifacts art{cfg.out_dir, {}};
  fs::create_directories(art.dir);

  int code = kExitOk;
  std::string schema = kResultsSchema;
  if (cfg.kind == ExperimentKind::Verify) {
    schema = kVerifySchema;
    code = run_verify(cfg, art, log);
  } else {
    const TransitionModel model(cfg.p01, cfg.p11);
    const BeliefVector belief = BeliefVector::initial(initial_belief(cfg.p01, cfg.p11, cfg.n, cfg, log));
    const auto params = policy_params(cfg, model);
    std::vector<ResultRow> rows;
    std::vector<RunRecord> traces;
    std::ostringstream trace_text;

    SimConfig sim;
    sim.model = model;
    sim.horizon = HorizonSpec(cfg.T, cfg.beta);
    sim.k = cfg.k;
    sim.initial_belief = belief;
    sim.replications = cfg.replications;
    sim.seed = cfg.seed;
    sim.threads = cfg.threads;
    sim.trace_replications = cfg.traces ? cfg.trace_replications : 0;

    if (cfg.kind == ExperimentKind::Compare) {
      const auto t0 = Clock::now();
      auto a = make_policy(cfg.policies[0], params);
      auto b = make_policy(cfg.policies[1], params);
      const double va = analytic_value(cfg.policies[0], *a, belief, cfg, model);
      const double vb = analytic_value(cfg.policies[1], *b, belief, cfg, model);
      const auto paired = common_random_numbers_compare(sim, *a, *b);
      const double rt = seconds_since(t0, cfg.timing);
      rows.push_back({"0", cfg.policies[0], va, paired.a.mean, paired.a.standard_error, rt});
      rows.push_back({"0", cfg.policies[1], vb, paired.b.mean, paired.b.standard_error, rt});
      rows.push_back({"0", cfg.policies[0] + "-minus-" + cfg.policies[1], va - vb, paired.difference.mean,
                      paired.difference.standard_error, rt});
    } else {
      for (const auto& name : cfg.policies) {
        const auto t0 = Clock::now();
        auto policy = make_policy(name, params);
        ResultRow row{"0", name};
        row.analytic = analytic_value(name, *policy, belief, cfg, model);
        if (cfg.kind == ExperimentKind::Simulate) {
          const auto summary = simulate(sim, *policy);
          row.sim_mean = summary.mean;
          row.std_error = summary.standard_error;
          if (cfg.traces) write_traces(trace_text, summary.traces, name);
        }
        row.runtime = seconds_since(t0, cfg.timing);
        rows.push_back(row);
      }
    }
    auto out = art.open("results.csv");
    write_results(out, rows);
    if (cfg.traces && cfg.kind == ExperimentKind::Simulate) {
      auto tr = art.open("traces.jsonl");
      tr << trace_text.str();
    }
    for (const auto& r : rows)
      log << r.policy << ": analytic=" << format_number(r.analytic) << " simulated=" << format_number(r.sim_mean)
          << " se=" << format_number(r.std_error) << '\n';
  }
  write_metadata(art, cfg, "run", schema, seconds_since(start, cfg.timing));
  return code;
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.kind == ExperimentKind::Verify) fail("sweep needs a model config, not kind 'verify'");
  if (cfg.grid.empty()) fail("sweep needs a 'grid' with at least one axis");
  const auto start = Clock::now();
  Artifacts art{cfg.out_dir, {}};
  fs::create_directories(art.dir);

  auto axis_or = [](const auto& axis, auto base) {
    using T = decltype(base);
    return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto p01s = axis_or(cfg.grid.p01, cfg.p01);
  const auto p11s = axis_or(cfg.grid.p11, cfg.p11);
  const auto ks = axis_or(cfg.grid.k, cfg.k);
  const auto betas = axis_or(cfg.grid.beta, cfg.beta);
  const auto Ts = axis_or(cfg.grid.T, cfg.T);

  auto out = art.open("results.csv");
  out << "point_id,p01,p11,n,k,T,beta,regime,optimal_value,greedy_value,gap,negative_scan,runtime_s\n";
  std::size_t point = 0;
  bool positive_gap = false;
  SolverOptions opts;
  opts.max_memo = cfg.max_memo;
  for (double p01 : p01s)
    for (double p11 : p11s)
      for (std::size_t k : ks)
        for (double beta : betas)
          for (int T : Ts) {
            const auto t0 = Clock::now();
            const TransitionModel model(p01, p11);
            const HorizonSpec horizon(T, beta);
            const BeliefVector belief = BeliefVector::initial(initial_belief(p01, p11, cfg.n, cfg, log));
            OptimalSolver solver(model, horizon, k, opts);
            const double v_opt = solver.value(belief, 1);
            const double v_greedy =
                evaluate_policy(GreedyPolicy(k), belief, 1, model, horizon, k, std::nullopt, opts);
            const double gap = v_opt - v_greedy;
            const bool positive = model.positively_correlated();
            std::string scan = "n/a";
            if (!positive) scan = gap > kValueTolerance ? "greedy-suboptimal" : "greedy-optimal";
            if (positive && gap > kValueTolerance) positive_gap = true;
            out << point << ',' << format_number(p01) << ',' << format_number(p11) << ',' << cfg.n << ',' << k << ','
                << T << ',' << format_number(beta) << ',' << (positive ? "positive" : "negative") << ','
                << format_number(v_opt) << ',' << format_number(v_greedy) << ',' << format_number(gap) << ','
                << scan << ',' << format_number(seconds_since(t0, cfg.timing)) << '\n';
            ++point;
          }
  out.close();
  log << "sweep: " << point << " grid points written to " << (art.dir / "results.csv").string() << '\n';
  write_metadata(art, cfg, "sweep", kSweepSchema, seconds_since(start, cfg.timing));
  return positive_gap ? kExitViolations : kExitOk;
}

int run_command(const std::string& command, const fs::path& config_path, const CliOverrides& overrides,
                std::ostream& log) {
  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    overrides.apply(cfg);
    if (command == "run") return run_experiment(cfg, log);
    if (command == "sweep") return run_sweep(cfg, log);
    fail("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceCapError& e) {
    log << "resource cap: " << e.what() << '\n';
    return kExitResourceCap;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace osa
