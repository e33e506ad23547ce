#include "doctest.h"

#include <cmath>
#include <random>

#include "ftmas/error.hpp"
#include "ftmas/robustness.hpp"
#include "ftmas/synth_healthy.hpp"
#include "ftmas/synth_reconfig.hpp"

using namespace ftmas;
using doctest::Approx;

namespace {

template <class F>
ErrorCode design_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no ftmas::Error thrown");
  return ErrorCode::InvalidArgument;
}

Mat S1(double a) { return Mat::Constant(1, 1, a); }

AgentModel scalar_model(double a, double b, double bw, double c) {
  AgentModel m;
  m.A = S1(a);
  m.B = S1(b);
  m.Bw = S1(bw);
  m.C = S1(c);
  return m;
}

Topology team5() { return build_topology(5, {{1, 2}, {2, 3}, {1, 4}, {4, 5}, {3, 5}}, {1}); }

FaultModes agent1_modes() {
  FaultModes f = healthy_modes(4);
  f[1] = {ActuatorMode::Outage, 0.0};
  return f;
}

FaultModes agent2_modes(double loe, double stuck) {
  FaultModes f = healthy_modes(4);
  f[0] = {ActuatorMode::LOE, loe};
  f[1] = {ActuatorMode::Stuck, stuck};
  return f;
}

// Sentry reconfigurations are a few seconds each; share them.
const ReconfigGains& sentry_agent1() {
  static const ReconfigGains g = synthesize_reconfig(auv_preset().model, assemble_fault(auv_preset().model, agent1_modes()));
  return g;
}
const ReconfigGains& sentry_agent2() {
  static const ReconfigGains g =
      synthesize_reconfig(auv_preset().model, assemble_fault(auv_preset().model, agent2_modes(0.7, 1.0)));
  return g;
}

}  // namespace

// ---------------------------------------------------------------- synth_healthy

TEST_CASE("healthy synthesis: scalar closed form") {
  auto m = scalar_model(-1, 1, 0, 1);
  auto top = build_topology(1, {}, {1});
  HealthyOptions o;
  o.gain_scale = 0;  // raw c3 = 2 (1 - 1e-6)
  auto g = synthesize_healthy(m, top, 0.0, o);
  double c3 = g.coupling.c3;
  CHECK(c3 == Approx(2.0).epsilon(1e-5));
  // -2P - c3 P^2 + (1 + eps) = 0
  double P = (-1.0 + std::sqrt(1.0 + c3 * 1.001)) / c3;
  CHECK(g.P(0, 0) == Approx(P).epsilon(1e-9));
  CHECK(g.K(0, 0) == Approx(-P).epsilon(1e-12));
  CHECK(g.c1 == Approx(c3 / 2));
  CHECK(g.certificate < 0);
}

TEST_CASE("healthy synthesis: sentry team (scipy ARE oracle)") {
  auto pre = auv_preset();
  auto top = team5();
  HealthyOptions o;
  o.gain_scale = 0.1;
  auto g = synthesize_healthy(pre.model, top, 1.0, o);
  CHECK(g.coupling.c3 == Approx(102585.14567090686).epsilon(1e-9));
  Mat Pref(4, 4);
  Pref << 3.0806425598198337, 0, 0, 0,  //
      0, 24.873238548090548, -30.195803142534778, 5.8593794443965539,  //
      0, -30.195803142534778, 45.791448383603665, 2.4700141759436747,  //
      0, 5.8593794443965539, 2.4700141759436747, 13.523490302601054;
  CHECK((g.P - Pref).norm() <= 1e-6 * Pref.norm());
  CHECK((g.K + pre.model.B.transpose() * g.P).norm() == 0.0);
  CHECK(spectral(pre.model.A + g.c1 * pre.model.B * g.K).is_hurwitz);
  CHECK(g.certificate <= -o.margin_eps / 2);
  CHECK(coupling_matrix_slack(top, g.coupling.c2, g.coupling.c3) > 0);
  CHECK(pinning_inequality_max(top, g.coupling.c0, 1.0) < 0);

  // raw scale, rho = 1
  o.gain_scale = 1.0;
  auto g1 = synthesize_healthy(pre.model, top, 1.0, o);
  CHECK(g1.coupling.c3 == Approx(1025851.4567090686).epsilon(1e-9));
  CHECK(g1.P(0, 0) == Approx(1.0731721656581765).epsilon(1e-7));
  CHECK(g1.P(1, 2) == Approx(-3.0295302425362252).epsilon(1e-7));
  CHECK(g1.P(3, 3) == Approx(4.4126519165278522).epsilon(1e-7));
}

TEST_CASE("healthy synthesis: vanishing disturbance penalty") {
  auto pre = auv_preset();
  auto m0 = pre.model;
  m0.Bw.setZero();
  auto ga = synthesize_healthy(pre.model, team5(), 1.0);
  auto gb = synthesize_healthy(m0, team5(), 1.0);
  CHECK((ga.P - gb.P).norm() <= 1e-6 * gb.P.norm());
}

TEST_CASE("healthy synthesis: gamma raised when infeasible") {
  auto pre = auv_preset();
  HealthyOptions o;
  o.gain_scale = 0.1;
  o.gamma = 1e-4;
  auto g = synthesize_healthy(pre.model, team5(), 1.0, o);
  CHECK(g.gamma > 1e-4);
  CHECK(g.certificate < 0);
  RiccatiParams p = g.riccati;
  p.gamma = g.gamma / 1.01;
  bool infeasible_below = false;
  try {
    Mat P = solve_h_inf_riccati(pre.model.A, pre.model.B, pre.model.Bw, p);
    infeasible_below = riccati_inequality_lhs(pre.model.A, pre.model.B, pre.model.Bw, P, p) >= 0;
  } catch (const Error&) {
    infeasible_below = true;
  }
  CHECK(infeasible_below);
  CHECK(design_code_of([&] { synthesize_healthy(pre.model, build_topology(2, {{1, 2}}, {2}), 1.0); }) ==
        ErrorCode::NoSpanningTree);
}

TEST_CASE("healthy control law") {
  auto pre = auv_preset();
  HealthyOptions o;
  o.gain_scale = 0.1;
  auto g = synthesize_healthy(pre.model, team5(), 1.0, o);
  const double phi = 1e-3;
  Vec z = Vec::Zero(4);
  CHECK(healthy_control(g, 0, z, z, phi).norm() == 0.0);

  // K e_a far outside the boundary layer on every channel
  Vec ea = g.K.transpose() * g.K.transpose().completeOrthogonalDecomposition().pseudoInverse().transpose() * Vec::Zero(4);
  Vec target(4);
  target << 2 * phi, -2 * phi, 2 * phi, -2 * phi;
  // K has rank 2 (paired columns), so aim for a reachable pattern
  Vec ke_target = g.K * (g.K.completeOrthogonalDecomposition().pseudoInverse() * target);
  ea = g.K.completeOrthogonalDecomposition().pseudoInverse() * ke_target;
  Vec ke = g.K * ea;
  Vec sign_part = aux_control(g, 2, ea, phi) - g.coupling.c2(2) * ke;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(ke(k)) > phi) CHECK(std::abs(sign_part(k)) == Approx(g.coupling.c0(2)).epsilon(1e-12));
  }
  CHECK(sat(Vec::Constant(2, 3.0), 1.0) == Vec::Constant(2, 1.0));
  CHECK(sat(Vec::Constant(1, -0.25), 0.5)(0) == -0.5);
  CHECK(sat(Vec::Constant(1, -0.25), 0.0)(0) == -1.0);
  CHECK(sat(Vec::Zero(1), 0.0)(0) == 0.0);

  // finite differences in xi recover K1 exactly (linear part)
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0, 1);
  Vec xi(4), e(4);
  for (int k = 0; k < 4; ++k) xi(k) = N(rng), e(k) = N(rng);
  Mat J(4, 4);
  for (int k = 0; k < 4; ++k) {
    Vec d = Vec::Zero(4);
    d(k) = 1e-3;
    J.col(k) = (healthy_control(g, 1, xi + d, e, phi) - healthy_control(g, 1, xi - d, e, phi)) / 2e-3;
  }
  CHECK((J - g.K1()).norm() <= 1e-8 * g.K1().norm());
}

TEST_CASE("auxiliary network") {
  auto pre = auv_preset();
  auto top = team5();
  auto g = synthesize_healthy(pre.model, top, 1.0);
  Vec x0(4);
  x0 << 0.3, -0.1, 0.2, 1.0;
  std::vector<Vec> at(5, x0);
  for (const auto& e : aux_disagreement(top, at, x0)) CHECK(e.norm() == 0.0);
  auto dx = auxiliary_dynamics(pre.model, top, g, at, x0, 1e-3);
  for (const auto& d : dx) CHECK((d - pre.model.A * x0).norm() < 1e-15);

  // stacked identity e_a = (L22 kron I)(x_a - 1 kron x0)
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec> xa(5, Vec(4));
    for (auto& v : xa)
      for (int k = 0; k < 4; ++k) v(k) = N(rng);
    Vec stacked(20), expect(20);
    for (int i = 0; i < 5; ++i) stacked.segment(4 * i, 4) = xa[i] - x0;
    Mat Lk = Mat::Zero(20, 20);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) Lk.block(4 * i, 4 * j, 4, 4) = top.L22(i, j) * Mat::Identity(4, 4);
    expect = Lk * stacked;
    auto ea = aux_disagreement(top, xa, x0);
    for (int i = 0; i < 5; ++i) CHECK((ea[i] - expect.segment(4 * i, 4)).norm() < 1e-12);
  }

  auto single = build_topology(1, {}, {1});
  std::vector<Vec> one{x0 + Vec::Ones(4)};
  CHECK((aux_disagreement(single, one, x0)[0] - Vec::Ones(4)).norm() < 1e-15);
}

// ---------------------------------------------------------------- synth_reconfig

TEST_CASE("reconfig: matching and stuck solves") {
  GeometricDecomposition dec;
  dec.k = 0;
  dec.Bi1 = Mat(0, 1);
  dec.B1 = Mat(0, 1);
  dec.Bi2 = Mat(2, 1);
  dec.Bi2 << 1, 0;
  dec.B2 = Mat(2, 1);
  dec.B2 << 0, 1;
  auto [K, res] = solve_matching(dec, false);
  CHECK(res == Approx(1.0));
  CHECK(K.norm() == 0.0);

  dec.B2 << 3, 0;
  auto [K1, r1] = solve_matching(dec, false);
  dec.B2 *= 2;
  auto [K2, r2] = solve_matching(dec, false);
  CHECK((K2 - 2 * K1).norm() < 1e-14);
  CHECK(r1 < 1e-14);

  auto m = auv_preset().model;
  auto p0 = assemble_fault(m, agent2_modes(0.7, 0.0));
  CHECK(solve_stuck(p0).first.norm() == 0.0);

  // stuck actuator 2 at 1: actuator 4 (b2 = b4) takes -1
  auto p = assemble_fault(m, agent2_modes(0.7, 1.0));
  auto [uC, sres] = solve_stuck(p);
  CHECK(sres < 1e-12);
  Vec cmd = p.scatter(uC);
  CHECK(cmd(3) == Approx(-1.0).epsilon(1e-9));
  CHECK((m.B * delivered_input(agent2_modes(0.7, 1.0), cmd)).norm() < 1e-15);

  // stuck direction orthogonal to the remaining span
  AgentModel o;
  o.A = -Mat::Identity(2, 2);
  o.B = Mat::Identity(2, 2);
  o.Bw = Mat::Zero(2, 1);
  o.C = Mat::Identity(2, 2).topRows(1);
  FaultModes f = healthy_modes(2);
  f[1] = {ActuatorMode::Stuck, 2.0};
  auto po = assemble_fault(o, f);
  auto [u0, r0] = solve_stuck(po);
  CHECK(u0.norm() == 0.0);
  CHECK(r0 == Approx(2.0));
}

TEST_CASE("reconfig: no fault recovers the full input map") {
  auto m = auv_preset().model;
  auto g = synthesize_reconfig(m, assemble_fault(m, healthy_modes(4)));
  CHECK(g.exact);
  CHECK(g.matching_residual <= 1e-8);
  CHECK(g.u_C.norm() == 0.0);
  CHECK(spectral(m.A + m.B * g.K1r).is_hurwitz);
  Vec z4 = Vec::Zero(4);
  CHECK(reconfigured_control(g, z4, z4).norm() == 0.0);
}

TEST_CASE("reconfig: sentry agent 1, actuator 2 lost") {
  auto m = auv_preset().model;
  const auto& g = sentry_agent1();
  CHECK(g.exact);
  CHECK_FALSE(g.fallback);
  CHECK(g.V.dim() == 3);
  Mat Acl = m.A + g.partition.Br * g.K1r;
  CHECK(spectral(Acl).is_hurwitz);
  CHECK(g.lmi_margin < -1e-7);
  CHECK(g.gamma_f == Approx(std::sqrt(1 / g.alpha)).epsilon(1e-9));
  CHECK((g.dec.T * g.dec.T.transpose() - Mat::Identity(4, 4)).norm() < 1e-10);
  double hinf = h_inf_norm(g.dec.Tinv * Acl * g.dec.T, g.dec.Tinv * m.Bw, Mat::Identity(4, 4));
  CHECK(hinf <= g.gamma_f);
  CHECK(hinf >= 0.95 * g.gamma_f);
  // all closed-loop poles inside the design disk
  auto s = spectral(Acl);
  for (int i = 0; i < s.eigenvalues.size(); ++i) CHECK(std::abs(s.eigenvalues(i)) < 100.0);

  // independent re-substitution of the certificate
  Mat Sinv = g.column_scale.cwiseInverse().asDiagonal();
  auto decs = decompose(m.A, g.partition.Br * Sinv, m.B, m.Bw, m.C, g.V);
  auto data = reconfig_lmi_data(decs);
  VarMap v{{"X1", g.X1}, {"X2", g.X2}, {"Y2", g.Y2}};
  if (data.N.cols() > 0) v["Z"] = data.N.transpose() * (g.Y1 - data.Kf * g.X1);
  CHECK(lmi_certify(reconfig_lmi(data, g.alpha, 100.0), v));
}

TEST_CASE("reconfig: sentry agent 2, LOE and stuck") {
  auto m = auv_preset().model;
  const auto& g = sentry_agent2();
  CHECK(g.exact);
  CHECK(g.stuck_residual <= 1e-8);
  CHECK(spectral(m.A + g.partition.Br * g.K1r).is_hurwitz);
  // u_r linear in (xi_f, u_a) up to u_C
  Vec xi = Vec::LinSpaced(4, -1, 1), ua = Vec::LinSpaced(4, 0.5, 2);
  Vec a = reconfigured_control(g, xi, ua) - g.u_C;
  Vec b = reconfigured_control(g, 2 * xi, 2 * ua) - g.u_C;
  CHECK((b - 2 * a).norm() < 1e-9 * (1 + a.norm()));
  Vec cmd = reconfigured_command(g, xi, ua);
  CHECK(cmd(1) == 1.0);
}

TEST_CASE("reconfig: degenerate invariant subspace") {
  // Ker C = {0}: V* = 0, only stabilization and gamma_f
  AgentModel m;
  m.A = Mat(2, 2);
  m.A << 0.5, 1, 0, -0.2;
  m.B = Mat::Identity(2, 2);
  m.Bw = Mat::Ones(2, 1);
  m.C = Mat::Identity(2, 2);
  auto g = synthesize_reconfig(m, assemble_fault(m, healthy_modes(2)));
  CHECK(g.V.dim() == 0);
  CHECK(spectral(m.A + g.partition.Br * g.K1r).is_hurwitz);
  CHECK(g.gamma_f > 0);

  FaultModes lost = healthy_modes(2);
  lost[0] = lost[1] = {ActuatorMode::Outage, 0.0};
  CHECK(design_code_of([&] { corollary_variant(CorollaryKind::OutageOnly, m, {0, 1}, {}); }) ==
        ErrorCode::AllActuatorsLost);
}

TEST_CASE("reconfig: corollary variants") {
  auto m = auv_preset().model;
  auto out = corollary_variant(CorollaryKind::OutageOnly, m, {1}, {});
  CHECK(out.partition.remaining == sentry_agent1().partition.remaining);
  CHECK(out.exact);

  auto st = corollary_variant(CorollaryKind::StuckOnly, m, {1}, {1.0});
  CHECK(st.exact);
  CHECK(st.u_C.norm() > 0);

  // LOE 0.999 everywhere: gains close to the unfaulted design
  auto h = synthesize_reconfig(m, assemble_fault(m, healthy_modes(4)));
  auto l = corollary_variant(CorollaryKind::LoeOnly, m, {}, {0.999, 0.999, 0.999, 0.999});
  CHECK(l.exact);
  CHECK(std::abs(l.gamma_f - h.gamma_f) <= 1e-2 * h.gamma_f);
  CHECK(spectral(m.A + l.partition.Br * l.K1r).is_hurwitz);
}

// ---------------------------------------------------------------- robustness

TEST_CASE("severity bound: scalar arithmetic") {
  // A = 1, b = 2, K1r = -1: Ac = -1, P = 1, budget 1, ||b k|| = 2
  auto m = scalar_model(1, 2, 0, 1);
  ReconfigGains g;
  g.partition = assemble_fault(m, healthy_modes(1));
  g.K1r = S1(-1);
  auto r = severity_uncertainty_bound(m, g);
  CHECK(r.budget == Approx(1.0));
  CHECK(r.sensitivity(0) == Approx(2.0));
  CHECK(r.eps_max(0) == Approx(0.5));

  // a channel without gain is unbounded
  auto m2 = scalar_model(-1, 1, 0, 1);
  m2.B = Mat::Ones(1, 2);
  ReconfigGains z;
  z.partition = assemble_fault(m2, healthy_modes(2));
  z.K1r = Mat::Zero(2, 1);
  z.K1r(0, 0) = -1;
  auto rz = severity_uncertainty_bound(m2, z);
  CHECK(std::isinf(rz.eps_max(1)));
  CHECK(std::isfinite(rz.eps_max(0)));

  ReconfigGains u;
  u.partition = g.partition;
  u.K1r = S1(1);
  CHECK(design_code_of([&] { severity_uncertainty_bound(m, u); }) == ErrorCode::NotHurwitz);
  CHECK(design_code_of([&] { severity_uncertainty_bound(m, g, {-1.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("severity bound: soundness on the sentry agent 2 design") {
  auto m = auv_preset().model;
  const auto& g = sentry_agent2();
  auto r = severity_uncertainty_bound(m, g);
  REQUIRE(r.eps_max.size() == 3);
  for (int l = 0; l < 3; ++l) CHECK(r.eps_max(l) >= 0);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int s = 0; s < 20; ++s) {
    Vec eps(3);
    for (int l = 0; l < 3; ++l) eps(l) = std::isfinite(r.eps_max(l)) ? U(rng) * r.eps_max(l) : U(rng);
    CHECK(spectral(perturbed_closed_loop(m, g, eps)).is_hurwitz);
  }
  // the sigma_min budget is the looser one
  auto loose = severity_uncertainty_bound(m, g, {}, BudgetNorm::SigmaMin);
  CHECK(loose.budget >= r.budget);
  CHECK(r.budget == Approx(1.0 / sigma_max(r.P_lyap)).epsilon(1e-12));
  // zero perturbation is the nominal loop
  CHECK((perturbed_closed_loop(m, g, Vec::Zero(3)) - (m.A + g.partition.Br * g.K1r)).norm() < 1e-12);
  // true loop with the estimate as truth is the nominal loop too
  CHECK((true_reconfigured_loop(m, g, agent2_modes(0.7, 1.0)) - (m.A + g.partition.Br * g.K1r)).norm() < 1e-12);
}

TEST_CASE("perturbation check") {
  CHECK(perturbation_stability_check(-Mat::Identity(2, 2), 0.5));
  CHECK_FALSE(perturbation_stability_check(-Mat::Identity(2, 2), 1.0));
  CHECK(perturbation_stability_check(-Mat::Identity(2, 2), 0.0));
  Mat A(2, 2);
  A << -1, 10, 0, -1;
  CHECK(perturbation_stability_check(A, 0.0194));
  CHECK_FALSE(perturbation_stability_check(A, 0.0195));
  // the true destabilizing real perturbation [[0,0],[d,0]] needs d > 0.1
  Mat E = Mat::Zero(2, 2);
  E(1, 0) = 0.0999;
  CHECK(spectral(A + E).is_hurwitz);
  E(1, 0) = 0.1001;
  CHECK_FALSE(spectral(A + E).is_hurwitz);
  CHECK(design_code_of([] { perturbation_stability_check(Mat::Identity(1, 1), 0.1); }) == ErrorCode::NotHurwitz);
}

TEST_CASE("recovery delay: scalar exponential") {
  const double a = 0.5, h = 1e-3;
  auto peak = [a](double d) { return std::exp(a * d); };
  double d = max_recovery_delay(peak, 10.0, h, 20.0);
  CHECK(std::abs(d - 4.605170185988092) <= h);
  CHECK(peak(d) <= 10.0);
  CHECK(peak(d + h) > 10.0);
  CHECK(design_code_of([&] { max_recovery_delay([](double) { return 1.0; }, 10.0, h, 20.0); }) ==
        ErrorCode::NeverExceeds);
  CHECK(design_code_of([&] { max_recovery_delay(peak, 0.5, h, 20.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("stuck residual and steady offset") {
  auto m = auv_preset().model;
  const auto& g = sentry_agent2();
  CHECK(stuck_residual(m, g, agent2_modes(0.7, 1.0)).norm() < 1e-15);
  Vec eta = stuck_residual(m, g, agent2_modes(0.7, 1.2));
  // the residual is the unmatched part of the stuck column
  CHECK((eta - 0.2 * m.B.col(1)).norm() < 1e-15);
  Vec off = steady_output_offset(m, g, eta);
  Vec off2 = steady_output_offset(m, g, 2 * eta);
  CHECK((off2 - 2 * off).norm() < 1e-15);
  Mat Ac = m.A + g.partition.Br * g.K1r;
  CHECK((off + m.C * Ac.lu().solve(eta)).norm() < 1e-15);
}
