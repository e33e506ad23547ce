#include "ftmas/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

// Shared by every preset: sentry plant, five followers on a spanning tree
// rooted at the pinned agent 1, disturbance-free, leader speed steps.
const char* kBase = R"(version: 1
seed: 7
plant: {preset: sentry}
leader:
  schedule: [[0, 0.5], [40, 1.0], [80, 0.8]]
  u0M: auto
topology:
  followers: 5
  edges: [[1, 2], [2, 3], [1, 4], [4, 5], [3, 5]]
  pins: [1]
# small coupling gain and no attenuation demand: the faulty loops of the
# healthy law then grow fast enough to show within the horizon
design: {gamma: 1.0e9, gain_scale: 0.1}
reconfig: {pole_radius: 100}
# the boundary layer sets the consensus floor; h keeps RK4 inside its
# stability region on the steepest boundary-layer mode
simulation: {h: 5.0e-4, horizon: 120, phi: 5.0e-4, record_stride: 20}
initial: {followers: random, spread: 0.5, aux: leader}
disturbances: {mode: none}
)";

const char* kAgent1Outage = R"(  - agent: 1
    t_f: 25
    t_r: %TR%
    truth: [{actuator: 2, mode: outage}]
)";

const char* kAgent2Mixed = R"(  - agent: 2
    t_f: 25
    t_r: %TR%
    truth: [{actuator: 1, mode: loe, value: 0.7}, {actuator: 2, mode: stuck, value: 1.0}]
)";

std::string with_tr(std::string s, const std::string& tr) {
  auto p = s.find("%TR%");
  s.replace(p, 4, tr);
  return s;
}

std::string key_of(const AgentModel& model, const FaultModes& est, const ReconfigOptions& o) {
  std::ostringstream ss;
  ss.precision(17);
  for (const Mat* M : {&model.A, &model.B, &model.C, &model.Bw})
    for (Eigen::Index k = 0; k < M->size(); ++k) ss << M->data()[k] << ',';
  ss << '|';
  for (const auto& f : est) ss << static_cast<int>(f.mode) << ':' << f.value << ',';
  ss << '|' << o.lmi.feas_tol << ',' << o.lmi.max_iter << ',' << o.lmi.pd_floor << ',' << o.exact_tol
     << ',' << o.refine_matching << ',' << o.pole_radius << ',' << o.alpha.lo << ',' << o.alpha.hi << ','
     << o.alpha.rel_width;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<std::string> scenario_names() { return {"1", "2", "3", "4.1", "4.2"}; }

std::string scenario_preset(const std::string& name) {
  std::string s = kBase;
  if (name == "1") {
    // faults at 25 s, never reconfigured
    s += "name: scenario-1\nfaults:\n";
    s += with_tr(kAgent1Outage, "never") + with_tr(kAgent2Mixed, "never");
  } else if (name == "2") {
    // same faults, reconfigured 5 s later
    s += "name: scenario-2\nfaults:\n";
    s += with_tr(kAgent1Outage, "30") + with_tr(kAgent2Mixed, "30");
  } else if (name == "3") {
    // agent 2 reconfigured on wrong severity estimates
    s += "name: scenario-3\nfaults:\n";
    s += with_tr(kAgent1Outage, "30") + with_tr(kAgent2Mixed, "30");
    s += "    estimate: [{actuator: 1, mode: loe, value: 0.6}, {actuator: 2, mode: stuck, value: 0.9}]\n";
    s += "sweep:\n  parameter: faults.1.estimate.0.value\n"
         "  values: [0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]\n";
  } else if (name == "4.1") {
    // false alarm on healthy agent 2, reconfigured at once
    s += "name: scenario-4.1\nfaults:\n";
    s += "  - agent: 2\n    t_f: 20\n    t_r: 20\n    truth: []\n"
         "    estimate: [{actuator: 1, mode: loe, value: 0.7}, {actuator: 2, mode: stuck, value: 1.0}]\n";
  } else if (name == "4.2") {
    // agent 2 faulty and missed; the alarm reconfigures healthy agent 1 instead
    s += "name: scenario-4.2\nfaults:\n";
    s += "  - agent: 1\n    t_f: 20\n    t_r: 20\n    truth: []\n"
         "    estimate: [{actuator: 1, mode: loe, value: 0.7}, {actuator: 2, mode: stuck, value: 1.0}]\n";
    s += "  - agent: 2\n    t_f: 20\n    t_r: never\n"
         "    truth: [{actuator: 1, mode: loe, value: 0.7}, {actuator: 2, mode: stuck, value: 1.0}]\n";
  } else {
    throw Error(ErrorCode::ConfigError, "unknown scenario '" + name + "' (expected 1, 2, 3, 4.1 or 4.2)");
  }
  return s;
}

const ReconfigGains& GainCache::get(const AgentModel& model, const FaultModes& estimate,
                                    const ReconfigOptions& opts) {
  auto key = key_of(model, estimate, opts);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto g = synthesize_reconfig(model, assemble_fault(model, estimate), opts);
  return cache_.emplace(key, std::move(g)).first->second;
}

PreparedRun prepare_run(const RunConfig& cfg, GainCache* cache) {
  PreparedRun p;
  p.config = cfg;
  p.opts = cfg.sim;
  auto& s = p.setup;
  s.model = cfg.model;
  s.leader = cfg.leader;
  s.topology = config_topology(cfg);
  s.x0 = cfg.initial.leader.size() ? cfg.initial.leader : Vec::Zero(cfg.model.n());
  const int N = cfg.n_followers, n = cfg.model.n();

  auto t0 = std::chrono::steady_clock::now();
  double u0M = cfg.leader.u0M;
  if (!(u0M > 0.0)) {
    p.u0M_auto = true;
    u0M = leader_input_bound(s.model, s.leader, s.x0, p.opts.h, p.opts.horizon);
  }
  s.leader.u0M = u0M;
  s.healthy = synthesize_healthy(s.model, s.topology, u0M, cfg.healthy);
  p.healthy_seconds = seconds_since(t0);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-cfg.initial.spread, cfg.initial.spread);
  for (int i = 0; i < N; ++i) {
    Vec v(n);
    switch (cfg.initial.followers) {
      case FollowerInit::Random:
        for (int k = 0; k < n; ++k) v(k) = U(rng);
        break;
      case FollowerInit::Leader: v = s.x0; break;
      case FollowerInit::Explicit: v = cfg.initial.explicit_states[i]; break;
    }
    s.x.push_back(v);
  }
  if (cfg.initial.aux == AuxInit::Leader) s.xa.assign(N, s.x0);

  const auto& dc = cfg.disturbances;
  if (dc.mode == DisturbanceMode::Suite) {
    auto suite = disturbance_suite(dc.suite, N);
    s.leader_disturbance = suite[0];
    s.disturbances.assign(suite.begin() + 1, suite.end());
  } else if (dc.mode == DisturbanceMode::Explicit) {
    s.leader_disturbance = dc.leader;
    if (dc.followers.size() == 1) {
      for (int i = 0; i < N; ++i) {
        auto d = dc.followers[0];
        d.seed += static_cast<std::uint64_t>(i);
        s.disturbances.push_back(d);
      }
    } else {
      s.disturbances = dc.followers;
    }
  }

  t0 = std::chrono::steady_clock::now();
  GainCache local;
  GainCache& gc = cache ? *cache : local;
  for (const auto& f : cfg.faults) {
    AgentFaultPlan plan;
    plan.spec = FaultSpec{f.agent, f.t_f, f.truth, f.estimate, f.report_delay};
    plan.t_r = f.t_r;
    plan.gains = gc.get(s.model, f.estimate, cfg.reconfig);
    s.faults.push_back(std::move(plan));
  }
  p.reconfig_seconds = seconds_since(t0);
  return p;
}

double healthy_peak_norm(const PreparedRun& prep) {
  SimSetup s = prep.setup;
  s.faults.clear();
  SimOptions o = prep.opts;
  o.record_stride = std::max(1, static_cast<int>(o.horizon / o.h));
  auto tr = integrate(s, o);
  double peak = 0.0;
  for (const auto& a : tr.metrics.agents) peak = std::max(peak, a.max_state_norm);
  return peak;
}

PlanAnalysis analyze_plan(const PreparedRun& prep, int plan_index) {
  const auto& plan = prep.setup.faults.at(plan_index);
  const auto& model = prep.setup.model;
  const auto& g = *plan.gains;
  const int n = model.n();
  PlanAnalysis a;
  a.agent = plan.spec.agent;
  Mat Acl = model.A + g.partition.Br * g.K1r;
  a.h_inf_check = h_inf_norm(g.dec.Tinv * Acl * g.dec.T, g.dec.Tinv * model.Bw, Mat::Identity(n, n));
  a.nominal_max_real = spectral(Acl).max_real_part;
  a.true_max_real = spectral(true_reconfigured_loop(model, g, plan.spec.truth)).max_real_part;

  const auto& rem = g.partition.remaining;
  a.eps_actual.resize(rem.size());
  for (size_t l = 0; l < rem.size(); ++l) {
    const auto& t = plan.spec.truth[rem[l]];
    double eff = t.mode == ActuatorMode::Healthy ? 1.0 : t.mode == ActuatorMode::LOE ? t.value : 0.0;
    a.eps_actual(l) = eff - g.partition.gamma(l);
  }
  if (prep.config.analysis.severity_bound) {
    try {
      a.severity = severity_uncertainty_bound(model, g, prep.config.analysis.severity_weights);
      a.within_bound = true;
      for (size_t l = 0; l < rem.size(); ++l)
        if (std::abs(a.eps_actual(l)) > a.severity->eps_max(l)) a.within_bound = false;
    } catch (const Error& e) {
      a.severity_note = e.what();
    }
  }
  a.eta = stuck_residual(model, g, plan.spec.truth);
  a.predicted_offset = steady_output_offset(model, g, a.eta);
  return a;
}

RunResult execute_run(const RunConfig& cfg, GainCache* cache) {
  RunResult r;
  r.prep = prepare_run(cfg, cache);
  r.trace = integrate(r.prep.setup, r.prep.opts);
  for (size_t i = 0; i < r.prep.setup.faults.size(); ++i)
    r.analyses.push_back(analyze_plan(r.prep, static_cast<int>(i)));
  if (cfg.analysis.recovery_delay && !r.prep.setup.faults.empty()) {
    r.healthy_peak_norm = healthy_peak_norm(r.prep);
    r.x_M = cfg.analysis.x_M > 0.0 ? cfg.analysis.x_M : 10.0 * r.healthy_peak_norm;
    DelayOptions d;
    d.post_window = cfg.analysis.post_window;
    for (size_t i = 0; i < r.analyses.size(); ++i) {
      try {
        r.analyses[i].delay = max_recovery_delay(r.prep.setup, r.prep.opts, static_cast<int>(i), r.x_M, d);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NeverExceeds) throw;
        r.analyses[i].delay_note = "never exceeds x_M";
      }
    }
  }
  return r;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg) {
  if (cfg.sweep.parameter.empty()) throw Error(ErrorCode::ConfigError, "config has no sweep section");
  const std::string text = dump_config(cfg);
  GainCache cache;
  std::vector<SweepPoint> out;
  for (double v : cfg.sweep.values) {
    RunConfig c = parse_config(text, cfg.name + " (sweep)", {{cfg.sweep.parameter, number(v)}});
    c.analysis.recovery_delay = false;
    auto r = execute_run(c, &cache);
    SweepPoint p;
    p.value = v;
    p.diverged = r.trace.metrics.diverged;
    for (size_t i = 0; i < r.analyses.size(); ++i) {
      if (!std::isfinite(r.prep.setup.faults[i].t_r)) continue;
      p.worst_true_max_real = std::max(p.worst_true_max_real, r.analyses[i].true_max_real);
      if (r.analyses[i].true_max_real >= 0.0) p.true_loops_hurwitz = false;
    }
    for (const auto& a : r.trace.metrics.agents) {
      p.max_final_output_error = std::max(p.max_final_output_error, a.final_output_error);
      p.max_final_z = std::max(p.max_final_z, a.final_z);
    }
    out.push_back(p);
  }
  return out;
}

SweepVerdict sweep_verdict(const std::vector<SweepPoint>& points) {
  std::vector<SweepPoint> p = points;
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  SweepVerdict v;
  size_t k = 0;
  while (k < p.size() && p[k].stable()) ++k;
  if (k > 0) v.last_stable = p[k - 1].value;
  if (k < p.size()) v.first_unstable = p[k].value;
  bool rest_unstable = true;
  for (size_t j = k; j < p.size(); ++j)
    if (p[j].stable()) rest_unstable = false;
  v.monotone_threshold = k > 0 && k < p.size() && rest_unstable;
  return v;
}

}  // namespace ftmas
