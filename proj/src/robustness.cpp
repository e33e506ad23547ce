#include "ftmas/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

Mat closed_loop(const AgentModel& model, const ReconfigGains& g) {
  return model.A + g.partition.Br * g.K1r;
}

}  // namespace

RobustnessReport severity_uncertainty_bound(const AgentModel& model, const ReconfigGains& g,
                                            const std::vector<double>& weights, BudgetNorm norm) {
  const auto& rem = g.partition.remaining;
  const int nr = static_cast<int>(rem.size());
  if (g.K1r.rows() != nr)
    throw Error(ErrorCode::InvalidArgument, "severity bound: K1r rows do not match the remaining channels");
  if (!weights.empty() && static_cast<int>(weights.size()) != nr)
    throw Error(ErrorCode::InvalidArgument, "severity bound: one weight per remaining channel");

  Mat Ac = closed_loop(model, g);
  if (spectral(Ac).max_real_part >= 0.0)
    throw Error(ErrorCode::NotHurwitz, "severity bound: reconfigured loop is not Hurwitz");

  RobustnessReport r;
  r.P_lyap = solve_lyapunov(Ac, 2.0 * Mat::Identity(Ac.rows(), Ac.cols()));
  r.budget = 1.0 / (norm == BudgetNorm::SigmaMin ? sigma_min(r.P_lyap) : sigma_max(r.P_lyap));

  std::vector<double> w(nr, 1.0);
  if (!weights.empty()) w = weights;
  double wsum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "severity bound: negative weight");
    wsum += v;
  }
  if (!(wsum > 0.0)) throw Error(ErrorCode::InvalidArgument, "severity bound: weights sum to zero");

  r.sensitivity.resize(nr);
  r.eps_max.resize(nr);
  for (int l = 0; l < nr; ++l) {
    // rank one: ||b k||_2 = ||b|| ||k||
    double s = model.B.col(rem[l]).norm() * g.K1r.row(l).norm();
    r.sensitivity(l) = s;
    r.eps_max(l) = s == 0.0 ? kUnbounded : (w[l] / wsum) * r.budget / s;
  }
  return r;
}

Mat perturbed_closed_loop(const AgentModel& model, const ReconfigGains& g, const Vec& eps) {
  const auto& rem = g.partition.remaining;
  if (eps.size() != static_cast<Eigen::Index>(rem.size()))
    throw Error(ErrorCode::InvalidArgument, "perturbed loop: one entry per remaining channel");
  Mat Ac = closed_loop(model, g);
  for (size_t l = 0; l < rem.size(); ++l) Ac += eps(l) * model.B.col(rem[l]) * g.K1r.row(l);
  return Ac;
}

Mat true_reconfigured_loop(const AgentModel& model, const ReconfigGains& g, const FaultModes& truth) {
  validate_modes(truth, model.m());
  Mat Kfull = Mat::Zero(model.m(), model.n());
  const auto& rem = g.partition.remaining;
  for (size_t l = 0; l < rem.size(); ++l) Kfull.row(rem[l]) = g.K1r.row(l);
  return model.A + faulty_input_map(model.B, truth) * Kfull;
}

bool perturbation_stability_check(const Mat& Ac, double f_bound) {
  if (!(f_bound >= 0.0)) throw Error(ErrorCode::InvalidArgument, "perturbation check: negative bound");
  Mat P = solve_lyapunov(Ac, 2.0 * Mat::Identity(Ac.rows(), Ac.cols()));
  return f_bound < 1.0 / sigma_max(P);
}

Vec stuck_residual(const AgentModel& model, const ReconfigGains& g, const FaultModes& truth) {
  validate_modes(truth, model.m());
  // constant part of the delivered input when xi_f = 0 and u_a = 0
  return model.B * delivered_input(truth, g.partition.scatter(g.u_C));
}

Vec steady_output_offset(const AgentModel& model, const ReconfigGains& g, const Vec& eta) {
  Mat Ac = closed_loop(model, g);
  return -model.C * Ac.partialPivLu().solve(eta);
}

double max_recovery_delay(const std::function<double(double)>& peak_norm, double x_M, double h,
                          double delta_hi) {
  if (!(h > 0.0) || !(delta_hi >= 0.0) || !(x_M > 0.0))
    throw Error(ErrorCode::InvalidArgument, "recovery delay: h, x_M and the bracket must be positive");
  long hi = static_cast<long>(std::floor(delta_hi / h + 1e-9));
  if (peak_norm(0.0) > x_M)
    throw Error(ErrorCode::InvalidArgument, "recovery delay: state already exceeds x_M at the fault");
  if (peak_norm(hi * h) <= x_M)
    throw Error(ErrorCode::NeverExceeds, "recovery delay: state stays below x_M over the bracket");
  long lo = 0;
  while (hi - lo > 1) {
    long mid = lo + (hi - lo) / 2;
    if (peak_norm(mid * h) <= x_M) lo = mid;
    else hi = mid;
  }
  return lo * h;
}

double recovery_peak_norm(const SimSetup& setup, const SimOptions& opts, int plan_index,
                          double delta, double post_window) {
  if (plan_index < 0 || plan_index >= static_cast<int>(setup.faults.size()))
    throw Error(ErrorCode::InvalidArgument, "recovery delay: no such fault plan");
  SimSetup s = setup;
  auto& plan = s.faults[plan_index];
  if (!plan.gains)
    throw Error(ErrorCode::InvalidArgument, "recovery delay: the fault plan has no reconfigured gains");
  plan.t_r = plan.spec.t_f + delta;
  const int agent = plan.spec.agent;
  SimOptions o = opts;
  o.horizon = std::min(opts.horizon, plan.t_r + post_window);
  o.record_stride = std::max(1, static_cast<int>(o.horizon / o.h));  // metrics only
  // events of the other plans that fall past the shortened horizon never happen
  std::vector<AgentFaultPlan> kept;
  for (auto& f : s.faults) {
    if (f.spec.t_f > o.horizon) continue;
    if (f.t_r > o.horizon) f.t_r = kNever;
    kept.push_back(f);
  }
  s.faults = std::move(kept);
  auto tr = integrate(s, o);
  return tr.metrics.agents[agent].max_state_norm;
}

double max_recovery_delay(const SimSetup& setup, const SimOptions& opts, int plan_index,
                          double x_M, const DelayOptions& dopts) {
  if (plan_index < 0 || plan_index >= static_cast<int>(setup.faults.size()))
    throw Error(ErrorCode::InvalidArgument, "recovery delay: no such fault plan");
  const double t_f = setup.faults[plan_index].spec.t_f;
  double hi = dopts.delta_hi > 0.0 ? dopts.delta_hi : opts.horizon - t_f;
  hi = std::min(hi, opts.horizon - t_f);
  auto peak = [&](double d) { return recovery_peak_norm(setup, opts, plan_index, d, dopts.post_window); };
  return max_recovery_delay(peak, x_M, opts.h, hi);
}

}  // namespace ftmas
