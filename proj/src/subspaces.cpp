#include "ftmas/subspaces.hpp"

#include <algorithm>

#include "ftmas/error.hpp"

namespace ftmas {

Subspace kernel(const Mat& M, double rank_tol) {
  const int n = static_cast<int>(M.cols());
  if (M.rows() == 0) return Subspace::full(n);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * smax && s(i) > 0.0) ++rank;
  return {svd.matrixV().rightCols(n - rank), n};
}

Subspace image(const Mat& M, double rank_tol) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() == 0) return Subspace::zero(n);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * smax && s(i) > 0.0) ++rank;
  return {svd.matrixU().leftCols(rank), n};
}

Subspace subspace_sum(const Subspace& U, const Subspace& V, double rank_tol) {
  Mat M(U.ambient_dim, U.dim() + V.dim());
  M << U.basis, V.basis;
  return image(M, rank_tol);
}

Subspace orth_complement(const Subspace& V, double rank_tol) {
  if (V.dim() == 0) return Subspace::full(V.ambient_dim);
  return kernel(V.basis.transpose(), rank_tol);
}

Subspace intersect(const Subspace& U, const Subspace& V, double rank_tol) {
  // (U^perp + V^perp)^perp
  Subspace s = subspace_sum(orth_complement(U, rank_tol), orth_complement(V, rank_tol), rank_tol);
  return orth_complement(s, rank_tol);
}

Subspace preimage(const Mat& A, const Subspace& V, double rank_tol) {
  Subspace perp = orth_complement(V, rank_tol);
  if (perp.dim() == 0) return Subspace::full(static_cast<int>(A.cols()));
  return kernel(perp.basis.transpose() * A, rank_tol);
}

double containment_gap(const Subspace& outer, const Subspace& inner) {
  if (inner.dim() == 0) return 0.0;
  Mat R = inner.basis - outer.basis * (outer.basis.transpose() * inner.basis);
  return sigma_max(R);
}

bool contains(const Subspace& outer, const Subspace& inner, double tol) {
  return containment_gap(outer, inner) <= tol;
}

bool is_controlled_invariant(const Mat& A, const Mat& B, const Subspace& V, double tol) {
  if (V.dim() == 0) return true;
  Subspace target = subspace_sum(V, image(B));
  Subspace AV{A * V.basis, V.ambient_dim};
  // AV basis is not orthonormal; measure the residual directly
  Mat R = AV.basis - target.basis * (target.basis.transpose() * AV.basis);
  double scale = std::max(1.0, sigma_max(A));
  return sigma_max(R) <= tol * scale;
}

IsaResult max_controlled_invariant_trace(const Mat& A, const Mat& B_r, const Mat& C,
                                         double rank_tol) {
  const int n = static_cast<int>(A.rows());
  IsaResult out;
  Subspace kerC = C.rows() ? kernel(C, rank_tol) : Subspace::full(n);
  Subspace imB = image(B_r, rank_tol);
  Subspace V = kerC;
  out.dims.push_back(V.dim());
  for (int it = 0; it < n + 1; ++it) {
    Subspace next = intersect(kerC, preimage(A, subspace_sum(V, imB, rank_tol), rank_tol), rank_tol);
    out.dims.push_back(next.dim());
    bool fixed = next.dim() == V.dim();
    V = next;
    if (fixed) break;
  }
  out.space = V;
  return out;
}

Subspace max_controlled_invariant(const Mat& A, const Mat& B_r, const Mat& C, double rank_tol) {
  return max_controlled_invariant_trace(A, B_r, C, rank_tol).space;
}

Mat friend_matrix(const Mat& A, const Mat& B_r, const Subspace& V, double tol) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B_r.cols());
  const int k = V.dim();
  if (k == 0) return Mat::Zero(m, n);
  Mat M(n, k + m);
  M << V.basis, -B_r;
  Mat Mp = pinv(M);
  Mat U(m, k);
  double scale = std::max(1.0, sigma_max(A));
  for (int c = 0; c < k; ++c) {
    Vec rhs = A * V.basis.col(c);
    Vec sol = Mp * rhs;
    double res = (M * sol - rhs).norm();
    if (res > tol * scale)
      throw Error(ErrorCode::NotControlledInvariant,
                  "friend_matrix: residual " + std::to_string(res));
    U.col(c) = sol.tail(m);
  }
  return U * V.basis.transpose();
}

GeometricDecomposition decompose(const Mat& A, const Mat& B_r, const Mat& B, const Mat& Bw,
                                 const Mat& C, const Subspace& V) {
  const int n = static_cast<int>(A.rows());
  GeometricDecomposition d;
  d.k = V.dim();
  d.T1 = V.basis;
  d.T2 = orth_complement(V).basis;
  d.T.resize(n, n);
  d.T << d.T1, d.T2;
  d.Tinv = d.T.transpose();
  const int k = d.k, r = n - k;
  d.Abar = d.Tinv * A * d.T;
  d.Brbar = d.Tinv * B_r;
  d.Bbar = d.Tinv * B;
  d.Bwbar = d.Tinv * Bw;
  d.A11 = d.Abar.topLeftCorner(k, k);
  d.A12 = d.Abar.topRightCorner(k, r);
  d.A21 = d.Abar.bottomLeftCorner(r, k);
  d.A22 = d.Abar.bottomRightCorner(r, r);
  d.Bi1 = d.Brbar.topRows(k);
  d.Bi2 = d.Brbar.bottomRows(r);
  d.B1 = d.Bbar.topRows(k);
  d.B2 = d.Bbar.bottomRows(r);
  d.Bw1 = d.Bwbar.topRows(k);
  d.Bw2 = d.Bwbar.bottomRows(r);
  d.C2 = C * d.T2;
  return d;
}

}  // namespace ftmas
