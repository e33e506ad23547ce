#include "ftmas/matops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ftmas/error.hpp"

namespace ftmas {

SpectralReport spectral(const Mat& A) {
  SpectralReport r;
  if (A.size() == 0) {
    r.max_real_part = -std::numeric_limits<double>::infinity();
    r.is_hurwitz = true;
    return r;
  }
  Eigen::EigenSolver<Mat> es(A, false);
  r.eigenvalues = es.eigenvalues();
  r.max_real_part = r.eigenvalues.real().maxCoeff();
  r.is_hurwitz = r.max_real_part < 0.0;
  return r;
}

double max_sym_eig(const Mat& S) {
  Mat H = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_sym_eig(const Mat& S) {
  Mat H = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double sigma_max(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double sigma_min(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

Mat pinv(const Mat& M, double rel_tol) {
  if (M.size() == 0) return Mat::Zero(M.cols(), M.rows());
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  double cut = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Vec sinv = Vec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0) sinv(i) = 1.0 / s(i);
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

Mat lyap_residual(const Mat& Ac, const Mat& P, const Mat& Q) {
  return P * Ac + Ac.transpose() * P + Q;
}

}  // namespace

Mat solve_lyapunov(const Mat& Ac, const Mat& Q, double rtol) {
  const int n = static_cast<int>(Ac.rows());
  if (Ac.cols() != n || Q.rows() != n || Q.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "solve_lyapunov: dimension mismatch");
  if (spectral(Ac).max_real_part >= 0.0)
    throw Error(ErrorCode::NotHurwitz, "solve_lyapunov: Ac has an eigenvalue with nonnegative real part");
  Mat Qs = 0.5 * (Q + Q.transpose());
  double qn = Qs.norm();
  if (qn == 0.0) return Mat::Zero(n, n);

  // (Ac^T kron I + I kron Ac^T) vec(P) = -vec(Q), column-major vec.
  const int nn = n * n;
  Mat M = Mat::Zero(nn, nn);
  Mat At = Ac.transpose();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int row = i + j * n;
      // (P Ac)_{ij} = sum_k P_{ik} Ac_{kj}
      for (int k = 0; k < n; ++k) M(row, i + k * n) += Ac(k, j);
      // (Ac^T P)_{ij} = sum_k At_{ik} P_{kj}
      for (int k = 0; k < n; ++k) M(row, k + j * n) += At(i, k);
    }
  Eigen::PartialPivLU<Mat> lu(M);
  Vec rhs = -Eigen::Map<const Vec>(Qs.data(), nn);
  Vec x = lu.solve(rhs);
  Mat P = Eigen::Map<Mat>(x.data(), n, n);
  P = 0.5 * (P + P.transpose());
  for (int it = 0; it < 3; ++it) {
    Mat R = lyap_residual(Ac, P, Qs);
    if (R.norm() <= 1e-3 * rtol * qn) break;
    Vec r = -Eigen::Map<const Vec>(R.data(), nn);
    Vec dx = lu.solve(r);
    P += Eigen::Map<Mat>(dx.data(), n, n);
    P = 0.5 * (P + P.transpose());
  }
  double res = lyap_residual(Ac, P, Qs).norm();
  if (!(res <= rtol * qn))
    throw Error(ErrorCode::IllConditioned, "solve_lyapunov: residual " + std::to_string(res / qn));
  return P;
}

namespace {

// Matrix sign function by scaled Newton iteration.
Mat matrix_sign(const Mat& H) {
  const int n = static_cast<int>(H.rows());
  Mat Z = H;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Mat> lu(Z);
    double logdet = 0.0;
    const Mat& LU = lu.matrixLU();
    for (int i = 0; i < n; ++i) logdet += std::log(std::abs(LU(i, i)));
    double c = std::exp(-logdet / n);
    if (!std::isfinite(c) || c <= 0.0) c = 1.0;
    Mat Zn = 0.5 * (c * Z + lu.inverse() / c);
    double diff = (Zn - Z).norm();
    Z = Zn;
    if (diff <= 1e-13 * Z.norm()) break;
  }
  return Z;
}

}  // namespace

Mat solve_h_inf_riccati(const Mat& A, const Mat& B, const Mat& Bw, const RiccatiParams& p) {
  const int n = static_cast<int>(A.rows());
  if (p.c3 <= 0.0 || p.c4inv <= 0.0 || p.gamma <= 0.0 || p.margin_eps < 0.0)
    throw Error(ErrorCode::InvalidArgument, "solve_h_inf_riccati: nonpositive parameter");
  Mat R = p.c3 * B * B.transpose();
  if (Bw.size() > 0) R -= 2.0 / (p.gamma * p.gamma) * p.c4inv * Bw * Bw.transpose();
  double q = p.d0 + p.margin_eps;

  Mat H(2 * n, 2 * n);
  H << A, -R, -q * Mat::Identity(n, n), -A.transpose();

  Eigen::EigenSolver<Mat> es(H, false);
  double hn = H.norm();
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    auto lam = es.eigenvalues()(i);
    if (std::abs(lam.real()) < p.itol * std::max(1.0, hn))
      throw Error(ErrorCode::HamiltonianImaginaryAxis,
                  "solve_h_inf_riccati: Hamiltonian eigenvalue near the imaginary axis");
  }

  Mat W = matrix_sign(H);
  Mat lhs(2 * n, n), rhs(2 * n, n);
  lhs << W.topRightCorner(n, n), W.bottomRightCorner(n, n) + Mat::Identity(n, n);
  rhs << -(W.topLeftCorner(n, n) + Mat::Identity(n, n)), -W.bottomLeftCorner(n, n);
  Mat P = lhs.colPivHouseholderQr().solve(rhs);
  P = 0.5 * (P + P.transpose());
  if (!P.allFinite())
    throw Error(ErrorCode::Infeasible, "solve_h_inf_riccati: no stabilizing solution");

  // Newton refinement on the equation residual.
  Mat Qc = q * Mat::Identity(n, n);
  auto residual = [&](const Mat& X) {
    return Mat(A.transpose() * X + X * A - X * R * X + Qc);
  };
  double rn = residual(P).norm();
  for (int it = 0; it < 4 && rn > 1e-14 * std::max(1.0, P.norm() * hn); ++it) {
    Mat Ac = A - R * P;
    Mat D;
    try {
      D = solve_lyapunov(Ac, residual(P), 1e-6);
    } catch (const Error&) {
      break;
    }
    Mat Pn = P + D;
    Pn = 0.5 * (Pn + Pn.transpose());
    double rnn = residual(Pn).norm();
    if (!(rnn < rn)) break;
    P = Pn;
    rn = rnn;
  }

  if (spectral(A - R * P).max_real_part >= 0.0)
    throw Error(ErrorCode::Infeasible, "solve_h_inf_riccati: solution is not stabilizing");
  if (min_sym_eig(P) <= 0.0)
    throw Error(ErrorCode::Infeasible, "solve_h_inf_riccati: solution is not positive definite");
  if (p.margin_eps > 0.0) {
    double lhs_max = riccati_inequality_lhs(A, B, Bw, P, p);
    if (!(lhs_max <= -0.5 * p.margin_eps))
      throw Error(ErrorCode::Infeasible, "solve_h_inf_riccati: strict inequality not certified");
  }
  return P;
}

double riccati_inequality_lhs(const Mat& A, const Mat& B, const Mat& Bw, const Mat& P,
                              const RiccatiParams& p) {
  const int n = static_cast<int>(A.rows());
  Mat S = A.transpose() * P + P * A - p.c3 * P * B * B.transpose() * P +
          p.d0 * Mat::Identity(n, n);
  if (Bw.size() > 0)
    S += 2.0 / (p.gamma * p.gamma) * p.c4inv * P * Bw * Bw.transpose() * P;
  return max_sym_eig(S);
}

double freq_gain(const Mat& A, const Mat& B, const Mat& C, double w) {
  using CMat = Eigen::MatrixXcd;
  const int n = static_cast<int>(A.rows());
  CMat M = std::complex<double>(0.0, w) * CMat::Identity(n, n) - A.cast<std::complex<double>>();
  CMat G = C.cast<std::complex<double>>() * M.partialPivLu().solve(B.cast<std::complex<double>>());
  if (G.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(G);
  return svd.singularValues()(0);
}

double h_inf_norm(const Mat& A, const Mat& B, const Mat& C, double tol) {
  const int n = static_cast<int>(A.rows());
  if (spectral(A).max_real_part >= 0.0)
    throw Error(ErrorCode::NotHurwitz, "h_inf_norm: A is not Hurwitz");
  if (B.norm() == 0.0 || C.norm() == 0.0) return 0.0;

  double lb = freq_gain(A, B, C, 0.0);
  Eigen::EigenSolver<Mat> esA(A, false);
  for (int i = 0; i < n; ++i)
    lb = std::max(lb, freq_gain(A, B, C, std::abs(esA.eigenvalues()(i))));

  Mat BB = B * B.transpose();
  Mat CC = C.transpose() * C;
  for (int it = 0; it < 200; ++it) {
    double g = (1.0 + 2.0 * tol) * lb;
    Mat H(2 * n, 2 * n);
    H << A, BB / (g * g), -CC, -A.transpose();
    Eigen::EigenSolver<Mat> es(H, false);
    double hn = H.norm();
    std::vector<double> ws;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      auto lam = es.eigenvalues()(i);
      if (std::abs(lam.real()) < 1e-8 * std::max(1.0, hn) && lam.imag() >= 0.0)
        ws.push_back(lam.imag());
    }
    if (ws.empty()) return (1.0 + tol) * lb;
    std::sort(ws.begin(), ws.end());
    double best = lb;
    if (ws.size() == 1) {
      best = std::max(best, freq_gain(A, B, C, ws[0]));
    } else {
      for (size_t k = 0; k + 1 < ws.size(); ++k)
        best = std::max(best, freq_gain(A, B, C, 0.5 * (ws[k] + ws[k + 1])));
    }
    if (best <= lb * (1.0 + 1e-12)) return (1.0 + tol) * lb;
    lb = best;
  }
  return lb;
}

double h_inf_norm_sweep(const Mat& A, const Mat& B, const Mat& C, int points, double w_lo,
                        double w_hi) {
  double best = freq_gain(A, B, C, 0.0);
  double a = std::log10(w_lo), b = std::log10(w_hi);
  for (int k = 0; k < points; ++k) {
    double w = std::pow(10.0, a + (b - a) * k / (points - 1));
    best = std::max(best, freq_gain(A, B, C, w));
  }
  return best;
}

}  // namespace ftmas
