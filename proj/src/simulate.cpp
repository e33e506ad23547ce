#include "ftmas/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ftmas/error.hpp"

namespace ftmas {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::FaultOccurs: return "fault_occurs";
    case EventKind::FdiReports: return "fdi_reports";
    case EventKind::ReconfigApplied: return "reconfig_applied";
    case EventKind::LeaderStep: return "leader_step";
  }
  return "?";
}

std::vector<Event> build_timeline(const SimSetup& setup, double horizon) {
  std::vector<Event> ev;
  for (const auto& s : setup.leader.schedule)
    if (s.t <= horizon) ev.push_back({s.t, EventKind::LeaderStep, -1, s.value});
  for (const auto& f : setup.faults) {
    ev.push_back({f.spec.t_f, EventKind::FaultOccurs, f.spec.agent, 0.0});
    ev.push_back({f.spec.t_f + f.spec.report_delay, EventKind::FdiReports, f.spec.agent, 0.0});
    if (std::isfinite(f.t_r)) ev.push_back({f.t_r, EventKind::ReconfigApplied, f.spec.agent, 0.0});
  }
  std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return ev;
}

namespace {

enum class Phase { Healthy, Faulty, Reconfigured };

struct Inputs {
  Vec u0;
  std::vector<Vec> ua, cmd;
};

class Team {
 public:
  Team(const SimSetup& s, const SimOptions& o)
      : s_(s), o_(o), n_(s.model.n()), N_(s.topology.n_followers), plan_(N_, -1) {
    for (size_t k = 0; k < s.faults.size(); ++k) {
      int a = s.faults[k].spec.agent;
      if (a < 0 || a >= N_) throw Error(ErrorCode::InvalidArgument, "fault refers to a missing agent");
      if (plan_[a] >= 0) throw Error(ErrorCode::InvalidArgument, "at most one fault plan per agent");
      plan_[a] = static_cast<int>(k);
    }
  }

  int dim() const { return n_ * (1 + 2 * N_); }
  int xo(int i) const { return n_ * (1 + i); }
  int ao(int i) const { return n_ * (1 + N_ + i); }

  Phase phase(int i, double t) const {
    if (plan_[i] < 0) return Phase::Healthy;
    const auto& f = s_.faults[plan_[i]];
    if (t >= f.t_r) return Phase::Reconfigured;
    if (t >= f.spec.t_f) return Phase::Faulty;
    return Phase::Healthy;
  }
  const AgentFaultPlan* plan(int i) const { return plan_[i] < 0 ? nullptr : &s_.faults[plan_[i]]; }

  // Control signals at state X; phases and the reference are fixed per step.
  Inputs inputs(const Vec& X, const std::vector<Phase>& ph, const Vec& r) const {
    Inputs in;
    Vec x0 = X.head(n_);
    in.u0 = s_.leader.K0 * x0 + s_.leader.F0 * r;
    std::vector<Vec> xa(N_);
    for (int i = 0; i < N_; ++i) xa[i] = X.segment(ao(i), n_);
    auto ea = aux_disagreement(s_.topology, xa, x0);
    in.ua.resize(N_);
    in.cmd.resize(N_);
    for (int i = 0; i < N_; ++i) {
      in.ua[i] = aux_control(s_.healthy, i, ea[i], o_.phi);
      Vec xi = X.segment(xo(i), n_) - xa[i];
      if (ph[i] == Phase::Reconfigured)
        in.cmd[i] = reconfigured_command(*plan(i)->gains, xi, in.ua[i]);
      else
        in.cmd[i] = s_.healthy.c1 * s_.healthy.K * xi + in.ua[i];
    }
    return in;
  }

  Vec rhs(const Vec& X, const Inputs& in, const std::vector<Phase>& ph, const Vec& w0,
          const std::vector<Vec>& w, const std::vector<char>& frozen) const {
    const auto& M = s_.model;
    Vec dX(dim());
    dX.head(n_) = M.A * X.head(n_) + M.B * in.u0 + M.Bw * w0;
    for (int i = 0; i < N_; ++i) {
      dX.segment(ao(i), n_) = M.A * X.segment(ao(i), n_) + M.B * in.ua[i];
      if (frozen[i]) {
        dX.segment(xo(i), n_).setZero();
        continue;
      }
      Vec u = ph[i] == Phase::Healthy ? in.cmd[i] : delivered_input(plan(i)->spec.truth, in.cmd[i]);
      dX.segment(xo(i), n_) = M.A * X.segment(xo(i), n_) + M.B * u + M.Bw * w[i];
    }
    return dX;
  }

 private:
  const SimSetup& s_;
  const SimOptions& o_;
  int n_, N_;
  std::vector<int> plan_;
};

void validate_setup(const SimSetup& s, const SimOptions& o) {
  validate_model(s.model);
  const int n = s.model.n(), N = s.topology.n_followers;
  if (!(o.h > 0.0) || !(o.horizon > 0.0) || o.record_stride < 1)
    throw Error(ErrorCode::InvalidArgument, "simulate: h, horizon and stride must be positive");
  if (s.x0.size() != n || static_cast<int>(s.x.size()) != N)
    throw Error(ErrorCode::InvalidArgument, "simulate: initial states do not match the team");
  for (const auto& v : s.x)
    if (v.size() != n) throw Error(ErrorCode::InvalidArgument, "simulate: bad follower state size");
  if (!s.xa.empty()) {
    if (static_cast<int>(s.xa.size()) != N)
      throw Error(ErrorCode::InvalidArgument, "simulate: bad auxiliary state count");
    for (const auto& v : s.xa)
      if (v.size() != n) throw Error(ErrorCode::InvalidArgument, "simulate: bad auxiliary state size");
  }
  if (!s.disturbances.empty() && static_cast<int>(s.disturbances.size()) != N)
    throw Error(ErrorCode::InvalidArgument, "simulate: one disturbance per follower expected");
  for (const auto& f : s.faults) {
    validate_modes(f.spec.truth, s.model.m());
    if (f.t_r < f.spec.t_f) throw Error(ErrorCode::InvalidArgument, "simulate: t_r before t_f");
    if (std::isfinite(f.t_r) && !f.gains)
      throw Error(ErrorCode::InvalidArgument, "simulate: reconfiguration without gains");
    if (f.spec.t_f > o.horizon || (std::isfinite(f.t_r) && f.t_r > o.horizon))
      throw Error(ErrorCode::InvalidArgument, "simulate: fault event beyond the horizon");
  }
}

bool blown(const Vec& v, double guard) {
  for (int k = 0; k < v.size(); ++k)
    if (!std::isfinite(v(k)) || std::abs(v(k)) > guard) return true;
  return false;
}

}  // namespace

SimTrace integrate(const SimSetup& s, const SimOptions& o) {
  validate_setup(s, o);
  Team team(s, o);
  const auto& M = s.model;
  const auto& top = s.topology;
  const int n = M.n(), N = top.n_followers;

  SimTrace tr;
  tr.n = n;
  tr.m = M.m();
  tr.q = M.q();
  tr.n_followers = N;
  tr.events = build_timeline(s, o.horizon);
  for (auto* v : {&tr.x, &tr.xa, &tr.u, &tr.e, &tr.ea, &tr.xi, &tr.z}) v->assign(N, {});

  Vec X(team.dim());
  X.head(n) = s.x0;
  for (int i = 0; i < N; ++i) {
    X.segment(team.xo(i), n) = s.x[i];
    X.segment(team.ao(i), n) = s.xa.empty() ? s.x[i] : s.xa[i];
  }

  DisturbanceSource src0(s.leader_disturbance, M.p(), o.h);
  std::vector<DisturbanceSource> src;
  src.reserve(N);
  for (int i = 0; i < N; ++i)
    src.emplace_back(s.disturbances.empty() ? DisturbanceSpec{} : s.disturbances[i], M.p(), o.h);

  auto& met = tr.metrics;
  met.agents.assign(N, {});
  std::vector<char> frozen(N, 0);
  const long steps = std::lround(std::ceil(o.horizon / o.h - 1e-9));
  const double window_start = 0.9 * o.horizon;
  long window_count = 0;

  std::vector<Phase> ph(N);
  auto phases_at = [&](double tm) {
    for (int i = 0; i < N; ++i) ph[i] = team.phase(i, tm);
  };
  auto recovery_time = [&](int i) {
    const auto* p = team.plan(i);
    return p ? p->t_r : kNever;
  };

  // Per-grid-point quantities; also feeds the trapezoid sums.
  struct Point {
    double team_x = 0.0;
    std::vector<double> xi2;
  };
  auto observe = [&](long k, const Vec& Xk, const Inputs& in, bool record) {
    const double t = k * o.h;
    Point pt;
    pt.xi2.assign(N, 0.0);
    Vec x0 = Xk.head(n);
    std::vector<Vec> xa(N), x(N), xi(N);
    for (int i = 0; i < N; ++i) {
      x[i] = Xk.segment(team.xo(i), n);
      xa[i] = Xk.segment(team.ao(i), n);
      xi[i] = x[i] - xa[i];
    }
    auto ea = aux_disagreement(top, xa, x0);
    auto e = aux_disagreement(top, x, x0);  // same formula on the physical states
    met.max_leader_input = std::max(met.max_leader_input, in.u0.lpNorm<Eigen::Infinity>());
    bool in_window = t >= window_start - 1e-9;
    if (in_window) ++window_count;
    for (int i = 0; i < N; ++i) {
      auto& am = met.agents[i];
      Vec z = M.C * xi[i];
      if (!frozen[i]) {
        Vec rhs_id = ea[i] + top.d(i) * xi[i];
        for (int j : top.neighbors(i)) rhs_id -= xi[j];
        double scale = 1.0 + e[i].norm() + ea[i].norm() + xi[i].norm();
        met.lemma1_residual = std::max(met.lemma1_residual, (e[i] - rhs_id).norm() / scale);
        pt.team_x += (x[i] - x0).squaredNorm();
      }
      am.max_state_norm = std::max(am.max_state_norm, x[i].norm());
      double tr_i = recovery_time(i);
      if (t >= tr_i - 1e-9) {
        pt.xi2[i] = xi[i].squaredNorm();
        if (t >= tr_i + o.settle - 1e-9)
          am.max_z_after_recovery = std::max(am.max_z_after_recovery, z.lpNorm<Eigen::Infinity>());
      }
      if (in_window) {
        am.final_tracking_error += (x[i] - x0).norm();
        am.final_output_error += (M.C * (x[i] - x0)).lpNorm<Eigen::Infinity>();
        am.final_aux_error += ea[i].norm();
        am.final_consensus_error += e[i].norm();
        am.final_z += z.lpNorm<Eigen::Infinity>();
      }
      if (record) {
        tr.x[i].push_back(x[i]);
        tr.xa[i].push_back(xa[i]);
        tr.u[i].push_back(in.cmd[i]);
        tr.e[i].push_back(e[i]);
        tr.ea[i].push_back(ea[i]);
        tr.xi[i].push_back(xi[i]);
        tr.z[i].push_back(z);
      }
    }
    if (record) {
      tr.t.push_back(t);
      tr.x0.push_back(x0);
      tr.u0.push_back(in.u0);
    }
    return pt;
  };

  auto disturbances = [&](double t, Vec& w0, std::vector<Vec>& w) {
    w0 = src0.value(t);
    w.resize(N);
    for (int i = 0; i < N; ++i) w[i] = src[i].value(t);
  };

  const double h = o.h;
  phases_at(0.5 * h);
  Vec r = s.leader.reference(0.5 * h);
  Point prev = observe(0, X, team.inputs(X, ph, r), true);

  long k = 0;
  for (; k < steps; ++k) {
    const double t = k * h;
    const double tm = t + 0.5 * h;
    phases_at(tm);
    r = s.leader.reference(tm);

    Vec w0a, w0b, w0c;
    std::vector<Vec> wa, wb, wc;
    disturbances(t, w0a, wa);
    disturbances(tm, w0b, wb);
    disturbances(t + h, w0c, wc);

    Inputs held;
    if (!o.stage_control) held = team.inputs(X, ph, r);
    auto f = [&](const Vec& Y, const Vec& ww0, const std::vector<Vec>& ww) {
      return team.rhs(Y, o.stage_control ? team.inputs(Y, ph, r) : held, ph, ww0, ww, frozen);
    };
    Vec k1 = f(X, w0a, wa);
    Vec k2 = f(X + 0.5 * h * k1, w0b, wb);
    Vec k3 = f(X + 0.5 * h * k2, w0b, wb);
    Vec k4 = f(X + h * k3, w0c, wc);
    Vec Xn = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    // leader or auxiliary network blew up: nothing downstream is meaningful
    if (blown(Xn.head(n), o.overflow_guard) ||
        blown(Xn.segment(team.ao(0), n * N), o.overflow_guard)) {
      met.aborted = true;
      met.diverged = true;
      break;
    }
    for (int i = 0; i < N; ++i) {
      if (frozen[i]) continue;
      if (blown(Xn.segment(team.xo(i), n), o.overflow_guard)) {
        frozen[i] = 1;
        met.agents[i].diverged = true;
        met.agents[i].t_diverged = t + h;
        met.diverged = true;
        if (!Xn.segment(team.xo(i), n).allFinite()) Xn.segment(team.xo(i), n) = X.segment(team.xo(i), n);
      }
    }

    // disturbance energy over [t, t+h] from this step's own samples
    met.team_disturbance_energy += 0.5 * h * (N * (w0a.squaredNorm() + w0c.squaredNorm()));
    for (int i = 0; i < N; ++i) {
      double wi = 0.5 * h * (wa[i].squaredNorm() + wc[i].squaredNorm());
      met.team_disturbance_energy += wi;
      if (t >= recovery_time(i) - 1e-9) met.agents[i].faulty_disturbance_energy += wi;
    }
    X = Xn;
    for (auto& sd : src) sd.advance();
    src0.advance();
    bool last = k + 1 == steps;
    bool record = last || (k + 1) % o.record_stride == 0;
    phases_at(t + 1.5 * h);
    Inputs in_next = team.inputs(X, ph, s.leader.reference(t + 1.5 * h));
    Point cur = observe(k + 1, X, in_next, record);
    met.team_state_energy += 0.5 * h * (prev.team_x + cur.team_x);
    for (int i = 0; i < N; ++i)
      if (t >= recovery_time(i) - 1e-9)
        met.agents[i].faulty_state_energy += 0.5 * h * (prev.xi2[i] + cur.xi2[i]);
    prev = std::move(cur);
  }
  met.t_end = std::min(k, steps) * h;
  met.final_reference = s.leader.schedule.empty() ? 0.0 : s.leader.reference(met.t_end).norm();

  const double guard_w = 1e-300;
  if (met.team_disturbance_energy > guard_w) met.team_ratio = met.team_state_energy / met.team_disturbance_energy;
  for (auto& am : met.agents) {
    if (window_count > 0) {
      am.final_tracking_error /= window_count;
      am.final_output_error /= window_count;
      am.final_aux_error /= window_count;
      am.final_consensus_error /= window_count;
      am.final_z /= window_count;
    }
    if (am.faulty_disturbance_energy > guard_w)
      am.faulty_ratio = am.faulty_state_energy / am.faulty_disturbance_energy;
  }
  return tr;
}

double leader_input_bound(const AgentModel& model, const LeaderSpec& leader, const Vec& x0,
                          double h, double horizon) {
  Vec x = x0;
  double best = 0.0;
  const long steps = std::lround(std::ceil(horizon / h - 1e-9));
  for (long k = 0; k <= steps; ++k) {
    double t = k * h;
    Vec r = leader.reference(t + 0.5 * h);
    best = std::max(best, (leader.K0 * x + leader.F0 * r).lpNorm<Eigen::Infinity>());
    if (k == steps) break;
    auto f = [&](const Vec& y) { return Vec(model.A * y + model.B * (leader.K0 * y + leader.F0 * r)); };
    Vec k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return best;
}

std::vector<std::string> trace_columns(const SimTrace& tr) {
  std::vector<std::string> c{"t"};
  for (int k = 0; k < tr.n; ++k) c.push_back("x0_" + std::to_string(k));
  for (int k = 0; k < tr.m; ++k) c.push_back("u0_" + std::to_string(k));
  for (int i = 0; i < tr.n_followers; ++i) {
    std::string a = std::to_string(i + 1);
    auto add = [&](const char* name, int len) {
      for (int k = 0; k < len; ++k) c.push_back(name + a + "_" + std::to_string(k));
    };
    add("x", tr.n);
    add("xa", tr.n);
    add("u", tr.m);
    add("e", tr.n);
    add("ea", tr.n);
    add("xi", tr.n);
    add("z", tr.q);
  }
  return c;
}

void write_trace_csv(std::ostream& os, const SimTrace& tr) {
  auto cols = trace_columns(tr);
  for (size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    os << buf;
  };
  auto put_vec = [&](const Vec& v) {
    for (int k = 0; k < v.size(); ++k) put(v(k));
  };
  for (size_t s = 0; s < tr.t.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.6f", tr.t[s]);
    os << buf;
    put_vec(tr.x0[s]);
    put_vec(tr.u0[s]);
    for (int i = 0; i < tr.n_followers; ++i) {
      put_vec(tr.x[i][s]);
      put_vec(tr.xa[i][s]);
      put_vec(tr.u[i][s]);
      put_vec(tr.e[i][s]);
      put_vec(tr.ea[i][s]);
      put_vec(tr.xi[i][s]);
      put_vec(tr.z[i][s]);
    }
    os << "\n";
  }
}

}  // namespace ftmas
