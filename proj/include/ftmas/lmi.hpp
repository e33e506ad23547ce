#pragma once

// Small dense LMI feasibility engine.
//
// A problem is a symmetric matrix expression affine in named matrix variables.
// The engine minimizes the largest eigenvalue of the expression (together with
// pd_floor*I - X for every variable flagged positive definite) by quasi-Newton
// descent on a log-sum-exp smoothing of the spectrum, shrinking the smoothing
// parameter until the strict inequality is certified or the budget runs out.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ftmas/matops.hpp"

namespace ftmas {

struct LmiVariable {
  std::string name;
  int rows = 1;
  int cols = 1;
  bool symmetric = false;
  bool positive_definite = false;
};

using VarMap = std::map<std::string, Mat>;

struct LmiProblem {
  std::vector<LmiVariable> variables;
  std::function<Mat(const VarMap&)> expression;
};

enum class LmiStatus { Feasible, MaxIterExceeded };

struct LmiSolution {
  LmiStatus status = LmiStatus::MaxIterExceeded;
  VarMap variables;
  double margin = 0.0;     // lambda_max of the assembled expression
  double pd_slack = 0.0;   // min over PD variables of lambda_min(X) - pd_floor
  double objective = 0.0;
  int iterations = 0;
  bool feasible() const { return status == LmiStatus::Feasible; }
};

struct LmiOptions {
  double feas_tol = 1e-7;
  int max_iter = 4000;
  double pd_floor = 1e-9;
};

LmiSolution lmi_feasible(const LmiProblem& problem, const LmiOptions& opts = {},
                         const VarMap* warm_start = nullptr);

// Independent re-verification of a candidate: every positive definite variable
// has lambda_min >= pd_floor and lambda_max(F) < -max(feas_tol, 1e3 n eps ||F||_2).
// The second term keeps roundoff in large-norm candidates from passing.
double lmi_margin(const LmiProblem& problem, const VarMap& vars);
bool lmi_certify(const LmiProblem& problem, const VarMap& vars, const LmiOptions& opts = {});

struct AlphaSearchOptions {
  double lo = 1e-9;
  double hi = 1e9;
  double rel_width = 1e-6;
};

struct AlphaResult {
  bool found = false;
  double alpha = 0.0;
  LmiSolution solution;
  int feasibility_calls = 0;
};

// Optional extra test on a certified candidate (e.g. re-checking the gain that is
// reconstructed from it). A rejected candidate counts as infeasible.
using AlphaAccept = std::function<bool(double alpha, const LmiSolution&)>;

// Largest alpha in [lo, hi] for which family(alpha) is certified feasible, by
// geometric bisection; returns the last feasible alpha.
AlphaResult lmi_maximize_alpha(const std::function<LmiProblem(double)>& family,
                               const AlphaSearchOptions& search = {},
                               const LmiOptions& opts = {}, const AlphaAccept& accept = {});

}  // namespace ftmas
