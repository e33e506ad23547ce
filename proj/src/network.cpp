#include "ftmas/network.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "ftmas/error.hpp"

namespace ftmas {

std::vector<int> Topology::neighbors(int i) const {
  std::vector<int> out;
  for (int j = 0; j < n_followers; ++j)
    if (adjacency(i, j) != 0.0) out.push_back(j);
  return out;
}

bool has_spanning_tree(const Topology& top) {
  const int N = top.n_followers;
  std::vector<bool> seen(N, false);
  std::queue<int> q;
  for (int i = 0; i < N; ++i)
    if (top.pins(i) != 0.0) {
      seen[i] = true;
      q.push(i);
    }
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (int i = 0; i < N; ++i)
      if (!seen[i] && top.adjacency(i, j) != 0.0) {
        seen[i] = true;
        q.push(i);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Topology build_topology(int n_followers, const std::vector<std::pair<int, int>>& edges,
                        const std::vector<int>& pins) {
  if (n_followers < 1) throw Error(ErrorCode::InvalidArgument, "topology: no followers");
  const int N = n_followers;
  Topology t;
  t.n_followers = N;
  t.adjacency = Mat::Zero(N, N);
  t.pins = Vec::Zero(N);
  for (auto [from, to] : edges) {
    if (from < 1 || from > N || to < 1 || to > N || from == to)
      throw Error(ErrorCode::InvalidArgument,
                  "topology: bad edge " + std::to_string(from) + "->" + std::to_string(to));
    t.adjacency(to - 1, from - 1) = 1.0;
  }
  for (int p : pins) {
    if (p < 1 || p > N) throw Error(ErrorCode::InvalidArgument, "topology: bad pin " + std::to_string(p));
    t.pins(p - 1) = 1.0;
  }
  t.d0_star = static_cast<int>(t.pins.sum());
  if (t.d0_star < 1) throw Error(ErrorCode::NoSpanningTree, "topology: no follower is pinned");

  Vec indeg = t.adjacency.rowwise().sum();
  t.D = indeg.asDiagonal();
  t.L22 = Mat(t.D) - t.adjacency;
  t.L22.diagonal() += t.pins;
  t.L21 = -t.pins;
  t.L = Mat::Zero(N + 1, N + 1);
  t.L.bottomLeftCorner(N, 1) = t.L21;
  t.L.bottomRightCorner(N, N) = t.L22;
  t.d = t.L22.diagonal();
  if (!has_spanning_tree(t))
    throw Error(ErrorCode::NoSpanningTree, "topology: some follower is unreachable from the leader");
  return t;
}

double coupling_matrix_slack(const Topology& top, const Vec& c2, double c3) {
  Mat C2 = c2.asDiagonal();
  return min_sym_eig(C2 * top.L22.transpose() + top.L22 * C2) - c3;
}

double pinning_inequality_max(const Topology& top, const Vec& c0, double u0M) {
  double worst = -1e300;
  for (int i = 0; i < top.n_followers; ++i) {
    double v = u0M - top.d(i) * c0(i);
    for (int j : top.neighbors(i)) v += c0(j);
    worst = std::max(worst, v);
  }
  return worst;
}

CouplingCoefficients coupling_gains(const Topology& top, double u0M, double safety) {
  if (safety <= 1.0) throw Error(ErrorCode::InvalidArgument, "coupling_gains: safety must exceed 1");
  const int N = top.n_followers;
  Vec ones = Vec::Ones(N);
  Eigen::PartialPivLU<Mat> lu(top.L22);
  Vec p = lu.solve(ones);                                   // L22^-1 1
  Vec q = top.L22.transpose().partialPivLu().solve(ones);   // L22^-T 1
  if ((p.array() <= 0.0).any() || (q.array() <= 0.0).any())
    throw Error(ErrorCode::MMatrixViolation, "coupling_gains: L22 is not a nonsingular M-matrix");

  CouplingCoefficients cc;
  // diag(p./q) makes C2 L22^T + L22 C2 positive definite for any nonsingular M-matrix
  cc.c2 = p.cwiseQuotient(q);
  cc.c3 = (min_sym_eig(Mat(cc.c2.asDiagonal()) * top.L22.transpose() +
                       top.L22 * Mat(cc.c2.asDiagonal()))) *
          (1.0 - 1e-6);
  if (cc.c3 <= 0.0) throw Error(ErrorCode::MMatrixViolation, "coupling_gains: c3 not positive");

  double u = std::max(u0M, 1e-6);
  cc.c0 = safety * u * p;

  Eigen::SelfAdjointEigenSolver<Mat> es(top.L22.transpose() * top.L22, Eigen::EigenvaluesOnly);
  cc.lambda_m = es.eigenvalues().minCoeff();
  cc.lambda_M = es.eigenvalues().maxCoeff();
  cc.c4inv = std::max(1.0, 1.0 / (N * cc.lambda_m));
  cc.c4 = 1.0 / cc.c4inv;
  return cc;
}

}  // namespace ftmas
