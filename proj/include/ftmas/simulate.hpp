#pragma once

// Fixed-step RK4 simulation of the leader, the followers and their auxiliary
// copies, with actuator faults and reconfiguration switching.

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ftmas/network.hpp"
#include "ftmas/plant.hpp"
#include "ftmas/synth_healthy.hpp"
#include "ftmas/synth_reconfig.hpp"

namespace ftmas {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// One faulty (or falsely reported) follower. The truth modes act from t_f;
// from t_r on the agent runs the reconfigured law designed on spec.estimate.
struct AgentFaultPlan {
  FaultSpec spec;
  double t_r = kNever;
  std::optional<ReconfigGains> gains;  // required when t_r is finite
};

enum class EventKind { FaultOccurs, FdiReports, ReconfigApplied, LeaderStep };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::LeaderStep;
  int agent = -1;  // -1 for leader events
  double value = 0.0;
};

const char* to_string(EventKind kind);

struct SimOptions {
  double h = 1e-3;
  double horizon = 120.0;
  double phi = 1e-3;              // boundary layer of the sign term
  double overflow_guard = 1e9;
  int record_stride = 1;          // keep every k-th step in the trace
  // Evaluate the control law at every RK stage (smooth right side, fourth
  // order). When false, inputs are sampled at the step start and held.
  bool stage_control = true;
  double settle = 0.0;            // z statistics start at t_r + settle
};

struct SimSetup {
  AgentModel model;
  LeaderSpec leader;
  Topology topology;
  HealthyGains healthy;
  std::vector<AgentFaultPlan> faults;
  DisturbanceSpec leader_disturbance;
  std::vector<DisturbanceSpec> disturbances;  // one per follower (empty = zero)
  Vec x0;                                     // leader initial state
  std::vector<Vec> x;                         // follower initial states
  std::vector<Vec> xa;                        // auxiliary initial states (empty = x)
};

struct AgentMetrics {
  bool diverged = false;
  double t_diverged = kNever;
  double final_tracking_error = 0.0;  // mean ||x_i - x0|| over the last 10%
  double final_output_error = 0.0;    // mean |C (x_i - x0)|_inf over the last 10%
  double final_aux_error = 0.0;       // mean ||e_a_i|| over the last 10%
  double final_consensus_error = 0.0; // mean ||e_i|| over the last 10%
  double max_state_norm = 0.0;
  double max_z_after_recovery = 0.0;  // max |z| for t >= t_r + settle (0 if never)
  double final_z = 0.0;               // mean |z|_inf over the last 10%
  // int ||xi_f||^2 and int ||w_i||^2 from t_r on (faulty agents)
  double faulty_state_energy = 0.0;
  double faulty_disturbance_energy = 0.0;
  std::optional<double> faulty_ratio;  // not applicable without disturbance energy
};

struct SimMetrics {
  bool diverged = false;   // any follower or the network blew up
  bool aborted = false;    // leader or auxiliary state non-finite: run stopped
  double t_end = 0.0;
  double team_state_energy = 0.0;        // int sum ||x_i - x0||^2
  double team_disturbance_energy = 0.0;  // int sum (||w_i||^2 + ||w_0||^2)
  std::optional<double> team_ratio;
  double max_leader_input = 0.0;         // max ||u0||_inf
  double lemma1_residual = 0.0;          // max |e_f - e_a - (d+g) xi + sum xi_j|
  double final_reference = 0.0;
  std::vector<AgentMetrics> agents;
};

struct SimTrace {
  int n = 0, m = 0, q = 0, n_followers = 0;
  std::vector<double> t;
  std::vector<Vec> x0, u0;
  // [agent][sample]
  std::vector<std::vector<Vec>> x, xa, u, e, ea, xi, z;
  std::vector<Event> events;
  SimMetrics metrics;
};

// Time-sorted events implied by the setup and the leader schedule.
std::vector<Event> build_timeline(const SimSetup& setup, double horizon);

SimTrace integrate(const SimSetup& setup, const SimOptions& opts);

// Largest ||u0||_inf of the leader alone over the horizon (used when u0M = auto).
double leader_input_bound(const AgentModel& model, const LeaderSpec& leader, const Vec& x0,
                          double h, double horizon);

// CSV with a fixed header: t, leader states and inputs, then per agent
// x, xa, u, e, ea, xi, z columns (names x1_0, xa1_0, ...; agents 1-based).
void write_trace_csv(std::ostream& os, const SimTrace& trace);
std::vector<std::string> trace_columns(const SimTrace& trace);

}  // namespace ftmas
