#include "ftmas/synth_healthy.hpp"

#include <algorithm>
#include <cmath>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

bool try_riccati(const AgentModel& model, const RiccatiParams& rp, Mat& P) {
  try {
    P = solve_h_inf_riccati(model.A, model.B, model.Bw, rp);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Infeasible || e.code() == ErrorCode::HamiltonianImaginaryAxis ||
        e.code() == ErrorCode::IllConditioned)
      return false;
    throw;
  }
}

}  // namespace

HealthyGains synthesize_healthy(const AgentModel& model, const Topology& top, double u0M,
                                const HealthyOptions& opts) {
  validate_model(model);
  if (!(opts.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  HealthyGains g;
  g.u0M = u0M;
  g.coupling = coupling_gains(top, u0M, opts.safety);
  if (opts.gain_scale > 0.0) {
    double sb = sigma_max(model.B);
    g.c2_scale = opts.gain_scale / (g.coupling.c3 * sb * sb);
    g.coupling.c2 *= g.c2_scale;
    g.coupling.c3 *= g.c2_scale;
  }

  RiccatiParams rp;
  rp.c3 = g.coupling.c3;
  rp.c4inv = g.coupling.c4inv;
  rp.d0 = top.d0_star;
  rp.margin_eps = opts.margin_eps;
  rp.gamma = opts.gamma;

  Mat P;
  if (!try_riccati(model, rp, P)) {
    // raise gamma until feasible, then tighten by bisection
    double lo = opts.gamma, hi = opts.gamma;
    bool ok = false;
    for (int k = 0; k < 80 && !ok; ++k) {
      lo = hi;
      hi *= 2.0;
      rp.gamma = hi;
      ok = try_riccati(model, rp, P);
    }
    if (!ok) throw Error(ErrorCode::Infeasible, "healthy Riccati inequality infeasible for every gamma");
    Mat Pbest = P;
    while (hi / lo > 1.0 + opts.gamma_rel_tol) {
      double mid = std::sqrt(lo * hi);
      rp.gamma = mid;
      Mat Pm;
      if (try_riccati(model, rp, Pm)) {
        hi = mid;
        Pbest = Pm;
      } else {
        lo = mid;
      }
    }
    rp.gamma = hi;
    P = Pbest;
  }
  g.P = P;
  g.K = -model.B.transpose() * P;
  g.c1 = 0.5 * g.coupling.c3;
  g.gamma = rp.gamma;
  g.riccati = rp;
  g.certificate = riccati_inequality_lhs(model.A, model.B, model.Bw, P, rp);
  return g;
}

Vec sat(const Vec& v, double phi) {
  Vec s(v.size());
  for (int i = 0; i < v.size(); ++i) {
    if (phi > 0.0) {
      s(i) = std::clamp(v(i) / phi, -1.0, 1.0);
    } else {
      s(i) = v(i) > 0.0 ? 1.0 : (v(i) < 0.0 ? -1.0 : 0.0);
    }
  }
  return s;
}

Vec aux_control(const HealthyGains& g, int i, const Vec& e_a, double phi) {
  Vec Ke = g.K * e_a;
  return g.coupling.c2(i) * Ke + g.coupling.c0(i) * sat(Ke, phi);
}

Vec healthy_control(const HealthyGains& g, int i, const Vec& xi, const Vec& e_a, double phi) {
  return g.c1 * (g.K * xi) + aux_control(g, i, e_a, phi);
}

std::vector<Vec> aux_disagreement(const Topology& top, const std::vector<Vec>& x_a, const Vec& x0) {
  const int N = top.n_followers;
  std::vector<Vec> e(N);
  for (int i = 0; i < N; ++i) {
    e[i] = top.pins(i) * (x_a[i] - x0);
    for (int j : top.neighbors(i)) e[i] += x_a[i] - x_a[j];
  }
  return e;
}

std::vector<Vec> auxiliary_dynamics(const AgentModel& model, const Topology& top,
                                    const HealthyGains& g, const std::vector<Vec>& x_a,
                                    const Vec& x0, double phi) {
  auto e = aux_disagreement(top, x_a, x0);
  std::vector<Vec> dx(x_a.size());
  for (size_t i = 0; i < x_a.size(); ++i)
    dx[i] = model.A * x_a[i] + model.B * aux_control(g, static_cast<int>(i), e[i], phi);
  return dx;
}

}  // namespace ftmas
