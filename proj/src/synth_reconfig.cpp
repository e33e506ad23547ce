#include "ftmas/synth_reconfig.hpp"

#include <cmath>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

Mat block_diag(const Mat& A, const Mat& B) {
  Mat M = Mat::Zero(A.rows() + B.rows(), A.cols() + B.cols());
  M.topLeftCorner(A.rows(), A.cols()) = A;
  M.bottomRightCorner(B.rows(), B.cols()) = B;
  return M;
}

// Stabilizing state feedback for (A, B) from a Riccati equation with unit weights.
Mat lqr_gain(const Mat& A, const Mat& B) {
  if (A.rows() == 0) return Mat::Zero(B.cols(), 0);
  if (B.cols() == 0 || B.norm() == 0.0) {
    if (spectral(A).is_hurwitz) return Mat::Zero(B.cols(), A.rows());
    throw Error(ErrorCode::NotStabilizable, "block has no input and is not Hurwitz");
  }
  if (!is_stabilizable(A, B)) throw Error(ErrorCode::NotStabilizable, "block is not stabilizable");
  RiccatiParams rp;
  rp.c3 = 1.0;
  rp.d0 = 1.0;
  rp.margin_eps = 0.0;
  Mat P = solve_h_inf_riccati(A, B, Mat::Zero(A.rows(), 0), rp);
  return -B.transpose() * P;
}

}  // namespace

ReconfigLmiData reconfig_lmi_data(const GeometricDecomposition& dec) {
  ReconfigLmiData d;
  d.dec = dec;
  const int mr = static_cast<int>(dec.Brbar.cols());
  if (dec.k > 0 && dec.Bi2.rows() > 0) {
    d.Kf = -pinv(dec.Bi2) * dec.A21;
    d.N = kernel(dec.Bi2).basis;
  } else {
    d.Kf = Mat::Zero(mr, dec.k);
    d.N = Mat::Identity(mr, mr);
  }
  return d;
}

LmiProblem reconfig_lmi(const ReconfigLmiData& data, double alpha, double pole_radius) {
  const auto& dec = data.dec;
  const int k = dec.k;
  const int n = static_cast<int>(dec.Abar.rows());
  const int r = n - k;
  const int mr = static_cast<int>(dec.Brbar.cols());
  const int nz = static_cast<int>(data.N.cols());
  LmiProblem p;
  if (k > 0) {
    p.variables.push_back({"X1", k, k, true, true});
    if (nz > 0) p.variables.push_back({"Z", nz, k, false, false});
  }
  if (r > 0) {
    p.variables.push_back({"X2", r, r, true, true});
    p.variables.push_back({"Y2", mr, r, false, false});
  }
  Mat Abar = dec.Abar, Br = dec.Brbar, BwBw = dec.Bwbar * dec.Bwbar.transpose();
  Mat Kf = data.Kf, N = data.N;
  p.expression = [=](const VarMap& v) {
    Mat X1 = k > 0 ? v.at("X1") : Mat(0, 0);
    Mat X2 = r > 0 ? v.at("X2") : Mat(0, 0);
    Mat Y1 = Mat::Zero(mr, k);
    if (k > 0) {
      Y1 = Kf * X1;
      if (nz > 0) Y1 += N * v.at("Z");
    }
    Mat Y2 = r > 0 ? v.at("Y2") : Mat(mr, 0);
    Mat X = block_diag(X1, X2);
    Mat Y(mr, n);
    Y << Y1, Y2;
    Mat AX = Abar * X + Br * Y;
    Mat Theta = AX + AX.transpose() + alpha * BwBw;
    Mat F(2 * n, 2 * n);
    F << Theta, X, X, -Mat::Identity(n, n);
    if (pole_radius <= 0.0) return F;
    Mat D(2 * n, 2 * n);
    D << -pole_radius * X, AX, AX.transpose(), -pole_radius * X;
    return block_diag(F, D);
  };
  return p;
}

std::pair<Mat, double> solve_matching(const GeometricDecomposition& dec, bool refine) {
  const int mr = static_cast<int>(dec.Bi2.cols());
  Mat K2 = pinv(dec.Bi2) * dec.B2;
  if (dec.Bi2.rows() == 0) K2 = Mat::Zero(mr, dec.B2.cols());
  if (refine && dec.k > 0 && dec.Bi1.size() > 0) {
    Mat N2 = dec.Bi2.rows() ? kernel(dec.Bi2).basis : Mat(Mat::Identity(mr, mr));
    if (N2.cols() > 0) {
      Mat M = dec.Bi1 * N2;
      Mat W = -pinv(M) * (dec.Bi1 * K2 - dec.B1);
      K2 += N2 * W;
    }
  }
  double res = dec.Bi2.rows() ? (dec.Bi2 * K2 - dec.B2).norm() : 0.0;
  return {K2, res};
}

std::pair<Vec, double> solve_stuck(const FaultPartition& part) {
  const int mr = static_cast<int>(part.Br.cols());
  if (part.stuck.empty() || part.u_s.size() == 0) return {Vec::Zero(mr), 0.0};
  Vec target = -part.Bs * part.u_s;
  Vec uC = pinv(part.Br) * target;
  return {uC, (part.Br * uC - target).norm()};
}

ReconfigGains synthesize_reconfig(const AgentModel& model, const FaultPartition& part,
                                  const ReconfigOptions& opts) {
  validate_model(model);
  if (part.Br.cols() == 0) throw Error(ErrorCode::AllActuatorsLost, "no remaining actuator");
  if (!is_stabilizable(model.A, part.Br))
    throw Error(ErrorCode::NotStabilizable, "(A, B_r) is not stabilizable");
  const int n = model.n();
  const int mr = static_cast<int>(part.Br.cols());

  ReconfigGains g;
  g.partition = part;
  g.V = max_controlled_invariant(model.A, part.Br, model.C);
  g.dec = decompose(model.A, part.Br, model.B, model.Bw, model.C, g.V);

  // Normalize the remaining input columns; the LMI is solved for S K.
  g.column_scale = part.Br.colwise().norm().transpose();
  for (int c = 0; c < mr; ++c)
    if (g.column_scale(c) == 0.0) g.column_scale(c) = 1.0;
  Mat Sinv = g.column_scale.cwiseInverse().asDiagonal();
  Mat Brs = part.Br * Sinv;
  GeometricDecomposition decs = decompose(model.A, Brs, model.B, model.Bw, model.C, g.V);
  ReconfigLmiData data = reconfig_lmi_data(decs);
  const int k = decs.k, r = n - k;
  if (k > 0 && r > 0) g.friend_residual = (decs.A21 + decs.Bi2 * data.Kf).norm();

  // Gain in transformed coordinates (normalized inputs) from an LMI solution.
  auto gain_of = [&](const VarMap& v, Mat& X1, Mat& X2, Mat& Y1, Mat& Y2) {
    X1 = k > 0 ? v.at("X1") : Mat(0, 0);
    X2 = r > 0 ? v.at("X2") : Mat(0, 0);
    Y1 = Mat::Zero(mr, k);
    if (k > 0) {
      Y1 = data.Kf * X1;
      if (data.N.cols() > 0) Y1 += data.N * v.at("Z");
    }
    Y2 = r > 0 ? v.at("Y2") : Mat(mr, 0);
    Mat K(mr, n);
    K << (k > 0 ? Mat(X1.llt().solve(Y1.transpose()).transpose()) : Mat(mr, 0)),
        (r > 0 ? Mat(X2.llt().solve(Y2.transpose()).transpose()) : Mat(mr, 0));
    return K;
  };
  Mat TTt_inv = (g.dec.T * g.dec.T.transpose()).inverse();
  const double tmin = min_sym_eig(TTt_inv);
  // The certificate is on (X, Y); near the supremum X becomes ill conditioned and
  // Y X^-1 can lose it, so the reconstructed loop is re-checked against the bound.
  auto accept = [&](double a, const LmiSolution& s) {
    Mat X1, X2, Y1, Y2;
    Mat Kb = gain_of(s.variables, X1, X2, Y1, Y2);
    if (!Kb.allFinite()) return false;
    Mat Acl = decs.Abar + decs.Brbar * Kb;
    if (!spectral(Acl).is_hurwitz) return false;
    double bound = std::sqrt(1.0 / (a * tmin));
    return h_inf_norm(g.dec.T * Acl * g.dec.Tinv, g.dec.T * decs.Bwbar, Mat::Identity(n, n)) <= bound;
  };
  AlphaResult ar = lmi_maximize_alpha(
      [&](double a) { return reconfig_lmi(data, a, opts.pole_radius); }, opts.alpha, opts.lmi, accept);
  g.feasibility_calls = ar.feasibility_calls;

  Mat Kbar_s(mr, n);
  bool lmi_ok = ar.found;
  if (lmi_ok) {
    const VarMap& v = ar.solution.variables;
    Kbar_s = gain_of(v, g.X1, g.X2, g.Y1, g.Y2);
    g.alpha = ar.alpha;
    g.lmi_margin = lmi_margin(reconfig_lmi(data, ar.alpha, opts.pole_radius), v);
    g.gamma_f = std::sqrt(1.0 / (g.alpha * tmin));
    g.K1r = Sinv * Kbar_s * g.dec.Tinv;
    if (!spectral(model.A + part.Br * g.K1r).is_hurwitz) lmi_ok = false;
  }
  if (!lmi_ok) {
    // block pole placement: friend part on the invariant block, LQR on each block
    g.fallback = true;
    Mat K1b(mr, k), K2b(mr, r);
    if (k > 0) {
      Mat A11c = decs.A11 + decs.Bi1 * data.Kf;
      Mat W = lqr_gain(A11c, decs.Bi1 * data.N);
      K1b = data.Kf + data.N * W;
    }
    if (r > 0) K2b = lqr_gain(decs.A22, decs.Bi2);
    Kbar_s << K1b, K2b;
    g.K1r = Sinv * Kbar_s * g.dec.Tinv;
    Mat Acl = model.A + part.Br * g.K1r;
    if (!spectral(Acl).is_hurwitz)
      throw Error(ErrorCode::NotStabilizable, "reconfigured loop could not be stabilized");
    g.gamma_f = h_inf_norm(g.dec.Tinv * Acl * g.dec.T, g.dec.Tinv * model.Bw, Mat::Identity(n, n));
    g.alpha = 1.0 / (g.gamma_f * g.gamma_f);
  }

  auto [K2r, mres] = solve_matching(g.dec, opts.refine_matching);
  g.K2r = K2r;
  g.matching_residual = mres;
  auto [uC, sres] = solve_stuck(part);
  g.u_C = uC;
  g.stuck_residual = sres;
  g.exact = g.matching_residual <= opts.exact_tol && g.stuck_residual <= opts.exact_tol &&
            g.friend_residual <= opts.exact_tol;
  return g;
}

Vec reconfigured_control(const ReconfigGains& g, const Vec& xi_f, const Vec& u_a) {
  return g.K1r * xi_f + g.K2r * u_a + g.u_C;
}

Vec reconfigured_command(const ReconfigGains& g, const Vec& xi_f, const Vec& u_a) {
  return g.partition.scatter(reconfigured_control(g, xi_f, u_a));
}

ReconfigGains corollary_variant(CorollaryKind kind, const AgentModel& model,
                                const std::vector<int>& indices, const std::vector<double>& values,
                                const ReconfigOptions& opts) {
  FaultModes modes = healthy_modes(model.m());
  switch (kind) {
    case CorollaryKind::LoeOnly:
      if (static_cast<int>(values.size()) != model.m())
        throw Error(ErrorCode::InvalidArgument, "LOE variant needs one factor per actuator");
      for (int k = 0; k < model.m(); ++k)
        if (values[k] < 1.0) modes[k] = {ActuatorMode::LOE, values[k]};
      break;
    case CorollaryKind::OutageOnly:
      for (int idx : indices) modes.at(idx) = {ActuatorMode::Outage, 0.0};
      break;
    case CorollaryKind::StuckOnly:
      if (indices.size() != values.size())
        throw Error(ErrorCode::InvalidArgument, "stuck variant needs one value per index");
      for (size_t k = 0; k < indices.size(); ++k) modes.at(indices[k]) = {ActuatorMode::Stuck, values[k]};
      break;
  }
  return synthesize_reconfig(model, assemble_fault(model, modes), opts);
}

}  // namespace ftmas
