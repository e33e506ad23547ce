#pragma once

// Agent and leader models, actuator fault models and disturbance generators.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ftmas/matops.hpp"

namespace ftmas {

struct AgentModel {
  Mat A, B, C, Bw;
  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int q() const { return static_cast<int>(C.rows()); }
  int p() const { return static_cast<int>(Bw.cols()); }
};

bool is_stabilizable(const Mat& A, const Mat& B, double tol = 1e-9);
// Throws InvalidArgument on dimension mismatch, NotStabilizable if (A,B) is not.
void validate_model(const AgentModel& model);

struct ReferenceStep {
  double t = 0.0;
  double value = 0.0;
};

struct LeaderSpec {
  Mat K0, F0;
  Vec direction;                       // r(t) = value(t) * direction
  std::vector<ReferenceStep> schedule;
  double u0M = 0.0;                    // 0 selects the bound from a leader pre-run
  Vec reference(double t) const;
};

enum class ActuatorMode { Healthy, LOE, Outage, Stuck };

struct ActuatorFault {
  ActuatorMode mode = ActuatorMode::Healthy;
  double value = 1.0;  // effectiveness for LOE, frozen command for Stuck
};

using FaultModes = std::vector<ActuatorFault>;  // one entry per physical actuator

FaultModes healthy_modes(int m);
void validate_modes(const FaultModes& modes, int m);
const char* to_string(ActuatorMode mode);

struct FaultSpec {
  int agent = 0;                 // 0-based follower index
  double t_f = 0.0;
  FaultModes truth;
  FaultModes estimate;           // what the detection module reports
  double report_delay = 0.0;
};

struct FaultPartition {
  std::vector<int> outage, stuck, remaining;  // physical actuator indices
  Mat Bo, Bs, Br;                             // Br carries the effectiveness factors
  Vec u_s;                                    // stuck commands
  Vec gamma;                                  // effectiveness of the remaining channels
  int m = 0;
  // Physical command vector [0 | u_s | u_r] in actuator order.
  Vec scatter(const Vec& u_r) const;
  Vec scatter(const Vec& u_r, const Vec& stuck_cmd) const;
};

FaultPartition assemble_fault(const AgentModel& model, const FaultModes& modes);
FaultPartition assemble_fault(const AgentModel& model, const FaultSpec& spec, bool use_estimates);

// Input actually delivered by each physical actuator for a given command.
Vec delivered_input(const FaultModes& modes, const Vec& command);
// B * diag(effectiveness) with outage and stuck columns removed (the loop gain map).
Mat faulty_input_map(const Mat& B, const FaultModes& modes);
// Constant forcing produced by stuck actuators.
Vec stuck_forcing(const Mat& B, const FaultModes& modes);

struct Preset {
  AgentModel model;
  LeaderSpec leader;
};

Preset auv_preset();
Preset preset_by_name(const std::string& name);

enum class DisturbanceKind { Zero, GaussMarkov, RandomWalk, Deterministic };

struct DecayingSinusoid {
  double amplitude = 0.0;
  double decay = 0.1;
  double frequency = 1.0;
  double phase = 0.0;
};

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::Zero;
  double mu = 0.0;
  double stddev = 0.0;
  double initial = 0.0;
  std::uint64_t seed = 0;
  std::vector<DecayingSinusoid> terms;
};

const char* to_string(DisturbanceKind kind);

// Stateful per-run generator; stochastic kinds are held constant over each step.
class DisturbanceSource {
 public:
  DisturbanceSource(const DisturbanceSpec& spec, int channels, double h);
  // Value at time t inside the current step (deterministic kinds are smooth).
  Vec value(double t) const;
  // Advances stochastic state to the next step.
  void advance();

 private:
  DisturbanceSpec spec_;
  int channels_;
  double h_;
  Vec state_;
  std::vector<std::mt19937_64> rng_;
  double decay_ = 1.0;
  double noise_sd_ = 0.0;
};

// Samples a single-channel signal on a uniform grid t_0, t_0 + h, ...
std::vector<double> sample_disturbance(const DisturbanceSpec& spec, const std::vector<double>& t_grid);

double deterministic_value(const std::vector<DecayingSinusoid>& terms, double t);

inline constexpr int kSuiteSize = 10;

// Member `index` of a fixed suite of finite-energy signals; entry 0 is the
// leader's disturbance, entries 1..N the followers'.
std::vector<DisturbanceSpec> disturbance_suite(int index, int n_followers);

}  // namespace ftmas
