#pragma once

// Healthy-team consensus gains and the distributed control law.

#include <vector>

#include "ftmas/matops.hpp"
#include "ftmas/network.hpp"
#include "ftmas/plant.hpp"

namespace ftmas {

struct HealthyOptions {
  double gamma = 1e9;        // requested attenuation bound; raised when infeasible
  // Target value of c3 * sigma_max(B)^2 after rescaling C2 (the coupling
  // inequality is homogeneous in C2). Nonpositive keeps the raw coefficients.
  double gain_scale = 1.0;
  double margin_eps = 1e-3;
  double safety = 1.1;
  double gamma_rel_tol = 1e-3;
};

struct HealthyGains {
  Mat P, K;                  // K = -B^T P
  double c1 = 0.0;           // c3 / 2
  CouplingCoefficients coupling;
  double c2_scale = 1.0;     // factor applied to the raw M-matrix coefficients
  double gamma = 0.0;        // attenuation bound actually certified
  double u0M = 0.0;
  RiccatiParams riccati;
  double certificate = 0.0;  // lambda_max of the Riccati inequality left side
  Mat K1() const { return c1 * K; }
  Mat K2(int i) const { return coupling.c2(i) * K; }
};

HealthyGains synthesize_healthy(const AgentModel& model, const Topology& top, double u0M,
                                const HealthyOptions& opts = {});

// Elementwise unit saturation of v / phi (sign function when phi == 0).
Vec sat(const Vec& v, double phi);

// u_i^a = c2i K e_a + c_i0 sat(K e_a / phi)
Vec aux_control(const HealthyGains& g, int i, const Vec& e_a, double phi);
// u_i = c1 K xi + u_i^a
Vec healthy_control(const HealthyGains& g, int i, const Vec& xi, const Vec& e_a, double phi);

// e_i^a = sum_{j in N_i} (x_i^a - x_j^a) + g_i0 (x_i^a - x0)
std::vector<Vec> aux_disagreement(const Topology& top, const std::vector<Vec>& x_a, const Vec& x0);

// Time derivatives of every auxiliary state.
std::vector<Vec> auxiliary_dynamics(const AgentModel& model, const Topology& top,
                                    const HealthyGains& g, const std::vector<Vec>& x_a,
                                    const Vec& x0, double phi);

}  // namespace ftmas
