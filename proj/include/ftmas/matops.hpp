#pragma once

// Dense numerical kernels: spectra, Lyapunov and Riccati solvers, H-infinity norm.

#include <Eigen/Dense>

namespace ftmas {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

struct SpectralReport {
  CVec eigenvalues;
  double max_real_part = 0.0;
  bool is_hurwitz = false;
};

SpectralReport spectral(const Mat& A);

// Largest eigenvalue of the symmetric part of S.
double max_sym_eig(const Mat& S);
double min_sym_eig(const Mat& S);

double sigma_max(const Mat& M);
double sigma_min(const Mat& M);

// Moore-Penrose pseudo-inverse with a relative singular value cutoff.
Mat pinv(const Mat& M, double rel_tol = 1e-12);

// Solves P*Ac + Ac^T*P = -Q.
Mat solve_lyapunov(const Mat& Ac, const Mat& Q, double rtol = 1e-9);

struct RiccatiParams {
  double c3 = 1.0;
  double c4inv = 1.0;
  double gamma = 1e9;
  double d0 = 1.0;
  double margin_eps = 1e-3;
  double itol = 1e-8;
};

// Stabilizing solution of A^T P + P A - P R P + (d0 + eps) I = 0 with
// R = c3 B B^T - 2 gamma^-2 c4inv Bw Bw^T. The returned P satisfies the strict
// inequality with d0 alone.
Mat solve_h_inf_riccati(const Mat& A, const Mat& B, const Mat& Bw, const RiccatiParams& p);

// Largest eigenvalue of A^T P + P A - c3 P B B^T P + 2 gamma^-2 c4inv P Bw Bw^T P + d0 I.
double riccati_inequality_lhs(const Mat& A, const Mat& B, const Mat& Bw, const Mat& P,
                              const RiccatiParams& p);

// Largest singular value of C (jw I - A)^-1 B.
double freq_gain(const Mat& A, const Mat& B, const Mat& C, double w);

// ||C (sI - A)^-1 B||_inf to relative accuracy tol (two-step Hamiltonian iteration).
double h_inf_norm(const Mat& A, const Mat& B, const Mat& C, double tol = 1e-6);

// Reference sweep over a log grid, used for cross-checking.
double h_inf_norm_sweep(const Mat& A, const Mat& B, const Mat& C, int points = 2000,
                        double w_lo = 1e-4, double w_hi = 1e4);

}  // namespace ftmas
