#pragma once

// Directed leader-follower topology and the coupling coefficients of the
// healthy consensus law.

#include <utility>
#include <vector>

#include "ftmas/matops.hpp"

namespace ftmas {

struct Topology {
  int n_followers = 0;
  Mat adjacency;            // g_ij = 1 if follower i receives from follower j (0-based)
  Vec pins;                 // g_i0
  Mat D, L, L21, L22;       // L is (N+1)x(N+1) with the leader first
  Vec d;                    // in-degree among followers plus pin, i.e. L22_ii
  int d0_star = 0;          // number of pinned followers
  std::vector<int> neighbors(int i) const;
};

// edges: (from, to) pairs with 1-based follower indices; to listens to from.
// pins: 1-based indices of followers that receive the leader state.
Topology build_topology(int n_followers, const std::vector<std::pair<int, int>>& edges,
                        const std::vector<int>& pins);

bool has_spanning_tree(const Topology& top);

struct CouplingCoefficients {
  Vec c2;        // diagonal of C2
  double c3 = 0.0;
  Vec c0;        // c_i0
  double c4 = 1.0;
  double c4inv = 1.0;
  double lambda_m = 0.0;
  double lambda_M = 0.0;
};

CouplingCoefficients coupling_gains(const Topology& top, double u0M, double safety = 1.1);

// lambda_min(C2 L22^T + L22 C2) - c3, positive when the matrix inequality holds.
double coupling_matrix_slack(const Topology& top, const Vec& c2, double c3);
// max_i (u0M - d_i c_i0 + sum_{j in N_i} c_j0), negative when every inequality holds.
double pinning_inequality_max(const Topology& top, const Vec& c0, double u0M);

}  // namespace ftmas
