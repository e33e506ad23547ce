#pragma once

// Geometric control algebra on subspaces of R^n represented by orthonormal bases.

#include <vector>

#include "ftmas/matops.hpp"

namespace ftmas {

inline constexpr double kRankTol = 1e-9;

struct Subspace {
  Mat basis;  // ambient_dim x dim, orthonormal columns
  int ambient_dim = 0;
  int dim() const { return static_cast<int>(basis.cols()); }
  static Subspace zero(int n) { return {Mat::Zero(n, 0), n}; }
  static Subspace full(int n) { return {Mat::Identity(n, n), n}; }
};

Subspace kernel(const Mat& M, double rank_tol = kRankTol);
Subspace image(const Mat& M, double rank_tol = kRankTol);
Subspace subspace_sum(const Subspace& U, const Subspace& V, double rank_tol = kRankTol);
Subspace intersect(const Subspace& U, const Subspace& V, double rank_tol = kRankTol);
Subspace orth_complement(const Subspace& V, double rank_tol = kRankTol);
// {x : A x in V}
Subspace preimage(const Mat& A, const Subspace& V, double rank_tol = kRankTol);
// Largest principal-angle residual of inner against outer: ||(I - QQ^T) inner||.
double containment_gap(const Subspace& outer, const Subspace& inner);
bool contains(const Subspace& outer, const Subspace& inner, double tol = 1e-8);
// A V subset of V + Im B
bool is_controlled_invariant(const Mat& A, const Mat& B, const Subspace& V, double tol = 1e-8);

struct IsaResult {
  Subspace space;
  std::vector<int> dims;  // dim V_0, dim V_1, ...
};

IsaResult max_controlled_invariant_trace(const Mat& A, const Mat& B_r, const Mat& C,
                                         double rank_tol = kRankTol);
Subspace max_controlled_invariant(const Mat& A, const Mat& B_r, const Mat& C,
                                  double rank_tol = kRankTol);

// F with (A + B_r F) V subset of V; zero on the orthogonal complement of V.
Mat friend_matrix(const Mat& A, const Mat& B_r, const Subspace& V, double tol = 1e-8);

struct GeometricDecomposition {
  Mat T, T1, T2, Tinv;
  int k = 0;  // dim of the invariant subspace
  Mat A11, A12, A21, A22;
  Mat Bi1, Bi2;  // transformed remaining-input map
  Mat B1, B2;    // transformed nominal input map
  Mat Bw1, Bw2;
  Mat C2;        // C T2 (C T1 = 0)
  Mat Abar, Brbar, Bbar, Bwbar;
};

GeometricDecomposition decompose(const Mat& A, const Mat& B_r, const Mat& B, const Mat& Bw,
                                 const Mat& C, const Subspace& V);

}  // namespace ftmas
