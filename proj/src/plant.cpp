#include "ftmas/plant.hpp"

#include <cmath>
#include <string>

#include "ftmas/error.hpp"

namespace ftmas {

bool is_stabilizable(const Mat& A, const Mat& B, double tol) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Mat> es(A, false);
  using CMat = Eigen::MatrixXcd;
  for (int i = 0; i < n; ++i) {
    auto lam = es.eigenvalues()(i);
    if (lam.real() < 0.0) continue;
    CMat M(n, n + B.cols());
    M << lam * CMat::Identity(n, n) - A.cast<std::complex<double>>(), B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < s.size(); ++k)
      if (s(k) > tol * std::max(1.0, s(0))) ++rank;
    if (rank < n) return false;
  }
  return true;
}

void validate_model(const AgentModel& m) {
  const int n = m.n();
  if (n < 1 || m.A.cols() != n || m.B.rows() != n || m.C.cols() != n || m.Bw.rows() != n ||
      m.m() < 1 || m.q() < 1)
    throw Error(ErrorCode::InvalidArgument, "agent model dimensions do not conform");
  if (!m.A.allFinite() || !m.B.allFinite() || !m.C.allFinite() || !m.Bw.allFinite())
    throw Error(ErrorCode::InvalidArgument, "agent model has non-finite entries");
  if (!is_stabilizable(m.A, m.B))
    throw Error(ErrorCode::NotStabilizable, "(A, B) is not stabilizable");
}

Vec LeaderSpec::reference(double t) const {
  double v = 0.0;
  for (const auto& s : schedule)
    if (t >= s.t) v = s.value;
  return v * direction;
}

FaultModes healthy_modes(int m) { return FaultModes(m); }

const char* to_string(ActuatorMode mode) {
  switch (mode) {
    case ActuatorMode::Healthy: return "healthy";
    case ActuatorMode::LOE: return "loe";
    case ActuatorMode::Outage: return "outage";
    case ActuatorMode::Stuck: return "stuck";
  }
  return "?";
}

void validate_modes(const FaultModes& modes, int m) {
  if (static_cast<int>(modes.size()) != m)
    throw Error(ErrorCode::InvalidArgument, "fault modes: expected one entry per actuator");
  for (const auto& f : modes)
    if (f.mode == ActuatorMode::LOE && !(f.value > 0.0 && f.value < 1.0))
      throw Error(ErrorCode::InvalidArgument, "fault modes: LOE effectiveness must lie in (0,1)");
}

Vec FaultPartition::scatter(const Vec& u_r) const { return scatter(u_r, u_s); }

Vec FaultPartition::scatter(const Vec& u_r, const Vec& stuck_cmd) const {
  Vec u = Vec::Zero(m);
  for (size_t k = 0; k < stuck.size(); ++k) u(stuck[k]) = stuck_cmd(k);
  for (size_t k = 0; k < remaining.size(); ++k) u(remaining[k]) = u_r(k);
  return u;
}

FaultPartition assemble_fault(const AgentModel& model, const FaultModes& modes) {
  const int m = model.m(), n = model.n();
  validate_modes(modes, m);
  FaultPartition p;
  p.m = m;
  for (int k = 0; k < m; ++k) {
    switch (modes[k].mode) {
      case ActuatorMode::Outage: p.outage.push_back(k); break;
      case ActuatorMode::Stuck: p.stuck.push_back(k); break;
      default: p.remaining.push_back(k); break;
    }
  }
  if (p.remaining.empty())
    throw Error(ErrorCode::AllActuatorsLost, "no actuator remains available");
  p.Bo.resize(n, p.outage.size());
  p.Bs.resize(n, p.stuck.size());
  p.Br.resize(n, p.remaining.size());
  p.u_s.resize(p.stuck.size());
  p.gamma.resize(p.remaining.size());
  for (size_t k = 0; k < p.outage.size(); ++k) p.Bo.col(k) = model.B.col(p.outage[k]);
  for (size_t k = 0; k < p.stuck.size(); ++k) {
    p.Bs.col(k) = model.B.col(p.stuck[k]);
    p.u_s(k) = modes[p.stuck[k]].value;
  }
  for (size_t k = 0; k < p.remaining.size(); ++k) {
    int a = p.remaining[k];
    double g = modes[a].mode == ActuatorMode::LOE ? modes[a].value : 1.0;
    p.gamma(k) = g;
    p.Br.col(k) = g * model.B.col(a);
  }
  return p;
}

FaultPartition assemble_fault(const AgentModel& model, const FaultSpec& spec, bool use_estimates) {
  return assemble_fault(model, use_estimates ? spec.estimate : spec.truth);
}

Vec delivered_input(const FaultModes& modes, const Vec& command) {
  Vec v = command;
  for (size_t k = 0; k < modes.size(); ++k) {
    switch (modes[k].mode) {
      case ActuatorMode::Healthy: break;
      case ActuatorMode::LOE: v(k) *= modes[k].value; break;
      case ActuatorMode::Outage: v(k) = 0.0; break;
      case ActuatorMode::Stuck: v(k) = modes[k].value; break;
    }
  }
  return v;
}

Mat faulty_input_map(const Mat& B, const FaultModes& modes) {
  Mat Bf = B;
  for (size_t k = 0; k < modes.size(); ++k) {
    switch (modes[k].mode) {
      case ActuatorMode::Healthy: break;
      case ActuatorMode::LOE: Bf.col(k) *= modes[k].value; break;
      case ActuatorMode::Outage:
      case ActuatorMode::Stuck: Bf.col(k).setZero(); break;
    }
  }
  return Bf;
}

Vec stuck_forcing(const Mat& B, const FaultModes& modes) {
  Vec f = Vec::Zero(B.rows());
  for (size_t k = 0; k < modes.size(); ++k)
    if (modes[k].mode == ActuatorMode::Stuck) f += modes[k].value * B.col(k);
  return f;
}

Preset auv_preset() {
  Preset p;
  auto& m = p.model;
  m.A.resize(4, 4);
  m.A << -0.0401, 0, 0, 0,
         0, -0.709, -0.648, 0,
         0, -1.770, 1.414, 0,
         0, 0, 1, 0;
  m.B.resize(4, 4);
  m.B << 0.44, 0.44, 0.44, 0.44,
         0.06, -0.06, 0.06, -0.06,
         0.49, -0.49, 0.49, -0.49,
         0, 0, 0, 0;
  m.B *= 1e-3;
  m.Bw.resize(4, 1);
  m.Bw << 0.023, 0.017, 0.03, 0;
  m.C.resize(1, 4);
  m.C << 1, 0, 0, 0;

  auto& l = p.leader;
  l.K0.resize(4, 4);
  l.K0 << -0.52, -3.5, -0.65, -8.0,
          -0.22, -0.19, 0.39, 0.48,
          -0.04, 3.48, -0.04, 6.47,
          -0.25, 0.17, 0.45, 1.19;
  l.K0 *= 1e4;
  l.F0.resize(4, 4);
  l.F0 << 3.02, -0.14, 0.36, 6.53,
          -0.14, 4.02, -1.93, -2.46,
          0.36, -1.93, -1.55, 3.61,
          6.53, -2.46, 3.61, -9.55;
  l.F0 *= 1e3;
  l.direction = Vec::Unit(4, 0);
  l.schedule = {{0.0, 0.5}, {40.0, 1.0}, {80.0, 0.8}};
  l.u0M = 0.0;
  return p;
}

Preset preset_by_name(const std::string& name) {
  if (name == "sentry") return auv_preset();
  throw Error(ErrorCode::ConfigError, "unknown plant preset '" + name + "'");
}

const char* to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::Zero: return "zero";
    case DisturbanceKind::GaussMarkov: return "gauss_markov";
    case DisturbanceKind::RandomWalk: return "random_walk";
    case DisturbanceKind::Deterministic: return "deterministic";
  }
  return "?";
}

double deterministic_value(const std::vector<DecayingSinusoid>& terms, double t) {
  double v = 0.0;
  for (const auto& s : terms)
    v += s.amplitude * std::exp(-s.decay * t) * std::sin(s.frequency * t + s.phase);
  return v;
}

DisturbanceSource::DisturbanceSource(const DisturbanceSpec& spec, int channels, double h)
    : spec_(spec), channels_(channels), h_(h), state_(Vec::Constant(channels, spec.initial)) {
  if (spec.kind == DisturbanceKind::GaussMarkov || spec.kind == DisturbanceKind::RandomWalk) {
    for (int c = 0; c < channels; ++c)
      rng_.emplace_back(spec.seed * 1000003ULL + static_cast<std::uint64_t>(c));
    double mu = spec.kind == DisturbanceKind::RandomWalk ? 0.0 : spec.mu;
    decay_ = std::exp(-mu * h);
    // exact discretization of dV = -mu V dt + sigma dW
    noise_sd_ = mu > 0.0 ? spec.stddev * std::sqrt((1.0 - std::exp(-2.0 * mu * h)) / (2.0 * mu))
                         : spec.stddev * std::sqrt(h);
  }
}

Vec DisturbanceSource::value(double t) const {
  switch (spec_.kind) {
    case DisturbanceKind::Zero: return Vec::Zero(channels_);
    case DisturbanceKind::Deterministic:
      return Vec::Constant(channels_, deterministic_value(spec_.terms, t));
    default: return state_;
  }
}

void DisturbanceSource::advance() {
  if (rng_.empty()) return;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int c = 0; c < channels_; ++c) state_(c) = decay_ * state_(c) + noise_sd_ * nd(rng_[c]);
}

std::vector<double> sample_disturbance(const DisturbanceSpec& spec, const std::vector<double>& t_grid) {
  std::vector<double> out;
  if (t_grid.empty()) return out;
  double h = t_grid.size() > 1 ? t_grid[1] - t_grid[0] : 1.0;
  DisturbanceSource src(spec, 1, h);
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    out.push_back(src.value(t)(0));
    src.advance();
  }
  return out;
}

std::vector<DisturbanceSpec> disturbance_suite(int index, int n_followers) {
  std::vector<DisturbanceSpec> out;
  for (int a = 0; a <= n_followers; ++a) {
    DisturbanceSpec s;
    s.kind = DisturbanceKind::Deterministic;
    // amplitudes, rates and frequencies vary with both the suite member and the agent
    double base_f = 0.05 * std::pow(1.9, index);
    double decay = 0.08 + 0.03 * (index % 4);
    s.terms.push_back({1.0 + 0.1 * a, decay, base_f * (1.0 + 0.15 * a), 0.3 * a});
    s.terms.push_back({0.5 * ((index + a) % 3), 2.0 * decay, 3.0 * base_f + 0.2, 1.0 + 0.2 * index});
    if (index % 2 == 1) s.terms.push_back({0.8, decay, 0.0, 1.5707963267948966});
    out.push_back(s);
  }
  return out;
}

}  // namespace ftmas
