#pragma once

// Run pipeline: config -> gains -> simulation -> analyses, the built-in
// scenario presets (plain config documents) and one-parameter sweeps.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftmas/config.hpp"
#include "ftmas/robustness.hpp"

namespace ftmas {

// "1", "2", "3", "4.1", "4.2"
std::vector<std::string> scenario_names();
// YAML text of a preset; throws ConfigError for an unknown name.
std::string scenario_preset(const std::string& name);

// Reconfigured designs keyed by the estimated fault modes, shared across
// runs that only differ elsewhere (sweeps).
class GainCache {
 public:
  const ReconfigGains& get(const AgentModel& model, const FaultModes& estimate, const ReconfigOptions& opts);
  int size() const { return static_cast<int>(cache_.size()); }

 private:
  std::map<std::string, ReconfigGains> cache_;
};

struct PreparedRun {
  RunConfig config;
  SimSetup setup;
  SimOptions opts;
  bool u0M_auto = false;
  double healthy_seconds = 0.0;
  double reconfig_seconds = 0.0;
};

// Synthesizes the healthy design and a reconfigured design for every fault
// entry (on its estimated modes), draws the initial states.
PreparedRun prepare_run(const RunConfig& cfg, GainCache* cache = nullptr);

struct PlanAnalysis {
  int agent = 0;
  double h_inf_check = 0.0;            // independent norm of the transformed loop
  double nominal_max_real = 0.0;       // A + B_r K1r on the estimate
  double true_max_real = 0.0;          // loop actually closed under the true modes
  std::optional<RobustnessReport> severity;
  std::string severity_note;
  Vec eps_actual;                      // true minus estimated effectiveness per remaining channel
  bool within_bound = false;
  Vec eta;                             // stuck residual under the true modes
  Vec predicted_offset;                // -C (A + B_r K1r)^-1 eta
  std::optional<double> delay;
  std::string delay_note;
};

struct RunResult {
  PreparedRun prep;
  SimTrace trace;
  std::vector<PlanAnalysis> analyses;
  double x_M = 0.0;
  double healthy_peak_norm = 0.0;
};

// Peak follower state norm of the same setup with every fault removed.
double healthy_peak_norm(const PreparedRun& prep);

RunResult execute_run(const RunConfig& cfg, GainCache* cache = nullptr);
PlanAnalysis analyze_plan(const PreparedRun& prep, int plan_index);

struct SweepPoint {
  double value = 0.0;
  bool diverged = false;
  bool true_loops_hurwitz = true;
  double worst_true_max_real = -kUnbounded;
  double max_final_output_error = 0.0;
  double max_final_z = 0.0;
  bool stable() const { return !diverged && true_loops_hurwitz; }
};

// Re-runs the normalized config with sweep.parameter set to each value.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg);

// Threshold summary of a sweep: the value range where stable() flips.
struct SweepVerdict {
  bool monotone_threshold = false;  // stable below some value, unstable from there on
  std::optional<double> last_stable, first_unstable;
};
SweepVerdict sweep_verdict(const std::vector<SweepPoint>& points);

}  // namespace ftmas
