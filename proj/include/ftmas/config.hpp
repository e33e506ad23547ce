#pragma once

// Run configuration: a versioned YAML document with line-accurate diagnostics,
// dotted-path overrides and a normalized dump that re-parses to itself.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftmas/simulate.hpp"

namespace ftmas {

inline constexpr int kConfigVersion = 1;

enum class FollowerInit { Random, Leader, Explicit };
enum class AuxInit { Leader, Agent };

struct InitialConfig {
  Vec leader;                      // empty: zero
  FollowerInit followers = FollowerInit::Random;
  double spread = 0.5;             // uniform in [-spread, spread] per component
  std::vector<Vec> explicit_states;
  AuxInit aux = AuxInit::Leader;
};

enum class DisturbanceMode { None, Suite, Explicit };

struct DisturbanceConfig {
  DisturbanceMode mode = DisturbanceMode::None;
  int suite = 0;
  DisturbanceSpec leader;
  std::vector<DisturbanceSpec> followers;  // one per follower, or a single one for all
};

struct FaultConfig {
  int agent = 0;                   // 0-based (1-based in the file)
  double t_f = 0.0;
  double t_r = kNever;
  double report_delay = 0.0;
  FaultModes truth, estimate;
};

struct AnalysisConfig {
  bool severity_bound = true;
  std::vector<double> severity_weights;
  bool recovery_delay = false;     // bisection over full runs: opt in
  double x_M = 0.0;                // 0: 10x the healthy peak state norm
  double post_window = 20.0;
};

struct SweepConfig {
  std::string parameter;           // dotted path, as for --set
  std::vector<double> values;
};

struct RunConfig {
  int version = kConfigVersion;
  std::string name = "run";
  std::string plant_preset = "sentry";  // empty when the matrices are explicit
  AgentModel model;
  LeaderSpec leader;
  int n_followers = 5;
  std::vector<std::pair<int, int>> edges;  // 1-based
  std::vector<int> pins;                   // 1-based
  HealthyOptions healthy;
  ReconfigOptions reconfig;
  SimOptions sim;
  std::uint64_t seed = 1;
  InitialConfig initial;
  DisturbanceConfig disturbances;
  std::vector<FaultConfig> faults;
  AnalysisConfig analysis;
  SweepConfig sweep;
};

// key=value with a dotted path into the document; sequence elements by index
// (faults.0.t_r=30). The value is parsed as YAML.
using Override = std::pair<std::string, std::string>;
Override parse_override(const std::string& assignment);

RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const std::vector<Override>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});

// Normalized document: every field explicit, fixed key order.
std::string dump_config(const RunConfig& cfg);

Topology config_topology(const RunConfig& cfg);

}  // namespace ftmas
