#pragma once

// Robustness analyses for the reconfigured loop: tolerance to severity
// estimation errors, the longest admissible recovery delay, and the Lyapunov
// perturbation test behind both.

#include <functional>
#include <limits>
#include <vector>

#include "ftmas/simulate.hpp"

namespace ftmas {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct RobustnessReport {
  Vec eps_max;             // per remaining channel; +inf when the channel has no gain
  Mat P_lyap;              // P Ac + Ac^T P = -2I
  double budget = 0.0;     // 1/sigma(P_lyap)
  Vec sensitivity;         // ||b^l k^l||_2
  double delta_max = kUnbounded;
  double x_M = 0.0;
  Vec eta;                 // residual forcing of the stuck compensation
};

// The budget can use sigma_max(P) (the form the perturbation theorem guarantees)
// or sigma_min(P). 1/sigma_min >= 1/sigma_max, so SigmaMin is the looser budget
// and is not sound in general.
enum class BudgetNorm { SigmaMin, SigmaMax };

// Per-channel bound on |Gamma - Gamma_hat| for the remaining actuators of g.
// weights: share of the budget per channel (empty = equal); normalized here.
RobustnessReport severity_uncertainty_bound(const AgentModel& model, const ReconfigGains& g,
                                            const std::vector<double>& weights = {},
                                            BudgetNorm norm = BudgetNorm::SigmaMax);

// Ac + sum_l eps_l b^l k^l for the remaining channels of g (b^l raw columns of B).
Mat perturbed_closed_loop(const AgentModel& model, const ReconfigGains& g, const Vec& eps);

// A + B diag(delivered effectiveness of truth) [K1r rows on the remaining
// channels]: the loop the reconfigured law actually closes.
Mat true_reconfigured_loop(const AgentModel& model, const ReconfigGains& g, const FaultModes& truth);

// f_bound < 1/sigma_max(P), P Ac + Ac^T P = -2I.
bool perturbation_stability_check(const Mat& Ac, double f_bound);

// Residual eta = B_s u_s,true + B_r u_C (what the stuck compensation leaves over),
// evaluated with the true stuck values and the estimate-side gains.
Vec stuck_residual(const AgentModel& model, const ReconfigGains& g, const FaultModes& truth);
// Predicted steady output offset -C (A + B_r K1r)^-1 eta.
Vec steady_output_offset(const AgentModel& model, const ReconfigGains& g, const Vec& eta);

// Largest delay on the grid {0, h, 2h, ...} below delta_hi whose peak state
// norm stays <= x_M, by bisection. peak_norm(delta) is the oracle. Throws
// NeverExceeds when even delta_hi stays under x_M.
double max_recovery_delay(const std::function<double(double)>& peak_norm, double x_M, double h,
                          double delta_hi);

struct DelayOptions {
  double post_window = 20.0;   // simulated time after the recovery
  double delta_hi = 0.0;       // 0: up to the end of the setup horizon
};

// Peak ||x_agent|| when the given fault plan is recovered at t_f + delta.
double recovery_peak_norm(const SimSetup& setup, const SimOptions& opts, int plan_index,
                          double delta, double post_window);

// Delay bound for one fault plan of a simulation setup (its gains must be set).
double max_recovery_delay(const SimSetup& setup, const SimOptions& opts, int plan_index,
                          double x_M, const DelayOptions& dopts = {});

}  // namespace ftmas
