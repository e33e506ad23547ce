#pragma once

// Reconfigured gains for a faulty agent: output-zeroing through the maximal
// controlled invariant subspace inside Ker C, with an LMI-optimized
// attenuation bound.

#include <utility>
#include <vector>

#include "ftmas/lmi.hpp"
#include "ftmas/plant.hpp"
#include "ftmas/subspaces.hpp"

namespace ftmas {

struct ReconfigOptions {
  LmiOptions lmi;
  AlphaSearchOptions alpha;
  double exact_tol = 1e-8;
  // Use the null-space freedom of the matching equation to also match the
  // components inside the invariant subspace.
  bool refine_matching = true;
  // Closed-loop poles are confined to the disk |s| < pole_radius (an extra LMI
  // block sharing X), which keeps the reconfigured loop integrable with a fixed
  // step. 0 disables the constraint.
  double pole_radius = 100.0;
};

struct ReconfigGains {
  Subspace V;
  GeometricDecomposition dec;
  FaultPartition partition;
  Mat K1r, K2r;
  Vec u_C;
  double alpha = 0.0;
  double gamma_f = 0.0;
  Mat X1, X2, Y1, Y2;        // LMI variables (input columns normalized to unit norm)
  Vec column_scale;          // norms of the B_r columns used for that normalization
  double lmi_margin = 0.0;
  double friend_residual = 0.0;
  double matching_residual = 0.0;
  double stuck_residual = 0.0;
  bool exact = false;
  bool fallback = false;     // LMI engine stalled; block pole placement used
  int feasibility_calls = 0;
};

ReconfigGains synthesize_reconfig(const AgentModel& model, const FaultPartition& part,
                                  const ReconfigOptions& opts = {});

// The LMI of the reconfiguration design at a fixed alpha, in the variables
// X1, X2 (positive definite), Z and Y2 with Y1 = Kf X1 + N Z.
struct ReconfigLmiData {
  GeometricDecomposition dec;  // with the normalized input map
  Mat Kf;                      // particular friend part
  Mat N;                       // null space of the normalized Bi2
};
ReconfigLmiData reconfig_lmi_data(const GeometricDecomposition& dec_scaled);
LmiProblem reconfig_lmi(const ReconfigLmiData& data, double alpha, double pole_radius = 0.0);

// Minimum-norm solution of Bi2 K2r = B2; returns (K2r, ||Bi2 K2r - B2||_F).
std::pair<Mat, double> solve_matching(const GeometricDecomposition& dec, bool refine = true);
// Minimum-norm solution of B_r u_C = -B_s u_s; returns (u_C, residual).
std::pair<Vec, double> solve_stuck(const FaultPartition& part);

// u_r = K1r xi_f + K2r u_a + u_C
Vec reconfigured_control(const ReconfigGains& g, const Vec& xi_f, const Vec& u_a);
// Physical command [0 | u_s | u_r] in actuator order.
Vec reconfigured_command(const ReconfigGains& g, const Vec& xi_f, const Vec& u_a);

enum class CorollaryKind { LoeOnly, OutageOnly, StuckOnly };

// LoeOnly: values are effectiveness factors per actuator (1 = healthy).
// OutageOnly: indices are the lost actuators.
// StuckOnly: indices with the frozen values.
ReconfigGains corollary_variant(CorollaryKind kind, const AgentModel& model,
                                const std::vector<int>& indices, const std::vector<double>& values,
                                const ReconfigOptions& opts = {});

}  // namespace ftmas
