#include "ftmas/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, where(source_, at.Mark()) + ": " + msg);
  }

  void keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& path) const {
    if (!map.IsMap()) fail(map, "'" + path + "' must be a mapping");
    for (const auto& kv : map) {
      auto k = kv.first.as<std::string>();
      if (!allowed.count(k)) fail(kv.first, "unknown field '" + (path.empty() ? k : path + "." + k) + "'");
    }
  }

  double num(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, "'" + field + "' must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + field + "' must be a number, got '" + n.Scalar() + "'");
    }
  }

  long integer(const YAML::Node& n, const std::string& field) const {
    double v = num(n, field);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(n, "'" + field + "' must be an integer");
    return static_cast<long>(v);
  }

  bool flag(const YAML::Node& n, const std::string& field) const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + field + "' must be true or false");
    }
  }

  std::string str(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, "'" + field + "' must be a string");
    return n.Scalar();
  }

  double positive(const YAML::Node& n, const std::string& field) const {
    double v = num(n, field);
    if (!(v > 0.0)) fail(n, "'" + field + "' must be positive");
    return v;
  }

  Vec vec(const YAML::Node& n, const std::string& field) const {
    if (!n.IsSequence()) fail(n, "'" + field + "' must be a list of numbers");
    Vec v(static_cast<Eigen::Index>(n.size()));
    for (size_t i = 0; i < n.size(); ++i) v(i) = num(n[i], field);
    return v;
  }

  Mat mat(const YAML::Node& n, const std::string& field) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, "'" + field + "' must be a list of rows");
    const size_t rows = n.size();
    if (!n[0].IsSequence()) fail(n, "'" + field + "' must be a list of rows");
    const size_t cols = n[0].size();
    Mat M(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
      if (!n[i].IsSequence() || n[i].size() != cols) fail(n[i], "'" + field + "': ragged rows");
      for (size_t j = 0; j < cols; ++j) M(i, j) = num(n[i][j], field);
    }
    return M;
  }

 private:
  std::string source_;
};

DisturbanceKind disturbance_kind(const Reader& r, const YAML::Node& n) {
  auto s = r.str(n, "kind");
  if (s == "zero") return DisturbanceKind::Zero;
  if (s == "gauss_markov") return DisturbanceKind::GaussMarkov;
  if (s == "random_walk") return DisturbanceKind::RandomWalk;
  if (s == "deterministic") return DisturbanceKind::Deterministic;
  r.fail(n, "unknown disturbance kind '" + s + "'");
}

DisturbanceSpec parse_disturbance(const Reader& r, const YAML::Node& n, const std::string& path,
                                  std::uint64_t default_seed) {
  r.keys(n, {"kind", "mu", "stddev", "initial", "seed", "terms"}, path);
  DisturbanceSpec s;
  if (!n["kind"]) r.fail(n, "'" + path + ".kind' is required");
  s.kind = disturbance_kind(r, n["kind"]);
  if (n["mu"]) s.mu = r.num(n["mu"], path + ".mu");
  if (n["stddev"]) s.stddev = r.num(n["stddev"], path + ".stddev");
  if (n["initial"]) s.initial = r.num(n["initial"], path + ".initial");
  s.seed = n["seed"] ? static_cast<std::uint64_t>(r.integer(n["seed"], path + ".seed")) : default_seed;
  if (s.mu < 0.0 || s.stddev < 0.0) r.fail(n, "'" + path + "': mu and stddev must be nonnegative");
  if (auto t = n["terms"]) {
    if (!t.IsSequence()) r.fail(t, "'" + path + ".terms' must be a list");
    for (const auto& e : t) {
      r.keys(e, {"amplitude", "decay", "frequency", "phase"}, path + ".terms");
      DecayingSinusoid d;
      if (e["amplitude"]) d.amplitude = r.num(e["amplitude"], "amplitude");
      if (e["decay"]) d.decay = r.num(e["decay"], "decay");
      if (e["frequency"]) d.frequency = r.num(e["frequency"], "frequency");
      if (e["phase"]) d.phase = r.num(e["phase"], "phase");
      if (!(d.decay > 0.0)) r.fail(e, "decaying terms need a positive decay (finite energy)");
      s.terms.push_back(d);
    }
  }
  return s;
}

FaultModes parse_modes(const Reader& r, const YAML::Node& n, int m, const std::string& path) {
  if (!n.IsSequence()) r.fail(n, "'" + path + "' must be a list of actuator entries");
  FaultModes modes = healthy_modes(m);
  std::set<long> seen;
  for (const auto& e : n) {
    r.keys(e, {"actuator", "mode", "value"}, path);
    if (!e["actuator"] || !e["mode"]) r.fail(e, "'" + path + "' entries need actuator and mode");
    long a = r.integer(e["actuator"], "actuator");
    if (a < 1 || a > m) r.fail(e["actuator"], "actuator " + std::to_string(a) + " does not exist");
    if (!seen.insert(a).second) r.fail(e["actuator"], "actuator " + std::to_string(a) + " listed twice");
    auto mode = r.str(e["mode"], "mode");
    ActuatorFault f;
    if (mode == "healthy") f = {ActuatorMode::Healthy, 1.0};
    else if (mode == "outage") f = {ActuatorMode::Outage, 0.0};
    else if (mode == "loe" || mode == "stuck") {
      if (!e["value"]) r.fail(e, "'" + mode + "' needs a value");
      f = {mode == "loe" ? ActuatorMode::LOE : ActuatorMode::Stuck, r.num(e["value"], "value")};
      if (f.mode == ActuatorMode::LOE && !(f.value > 0.0 && f.value < 1.0))
        r.fail(e["value"], "LOE effectiveness must lie in (0,1)");
    } else {
      r.fail(e["mode"], "unknown actuator mode '" + mode + "'");
    }
    modes[a - 1] = f;
  }
  return modes;
}

double time_or_never(const Reader& r, const YAML::Node& n, const std::string& field) {
  if (n.IsScalar() && n.Scalar() == "never") return kNever;
  return r.num(n, field);
}

void set_path(YAML::Node root, const Override& ov) {
  std::vector<std::string> parts;
  std::stringstream ss(ov.first);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw Error(ErrorCode::ConfigError, "override '" + ov.first + "': empty path segment");
    parts.push_back(p);
  }
  if (parts.empty()) throw Error(ErrorCode::ConfigError, "override with an empty key");
  YAML::Node value;
  try {
    value = YAML::Load(ov.second);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, "override '" + ov.first + "': " + e.msg);
  }
  YAML::Node cur = root;
  for (size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    bool last = k + 1 == parts.size();
    YAML::Node next;
    if (cur.IsSequence()) {
      size_t idx = 0;
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), idx);
      if (ec != std::errc() || ptr != p.data() + p.size() || idx >= cur.size())
        throw Error(ErrorCode::ConfigError, "override '" + ov.first + "': no element '" + p + "'");
      if (last) {
        cur[idx] = value;
        return;
      }
      next.reset(cur[idx]);
    } else {
      if (last) {
        cur[p] = value;
        return;
      }
      if (!cur[p]) cur[p] = YAML::Node(YAML::NodeType::Map);
      next.reset(cur[p]);
    }
    cur.reset(next);
  }
}

// Shortest representation that reads back to the same double.
std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void emit_vec(YAML::Emitter& out, const Vec& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v(i));
  out << YAML::EndSeq;
}

void emit_mat(YAML::Emitter& out, const Mat& M) {
  out << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < M.rows(); ++i) emit_vec(out, M.row(i).transpose());
  out << YAML::EndSeq;
}

void emit_disturbance(YAML::Emitter& out, const DisturbanceSpec& s) {
  out << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(s.kind);
  out << YAML::Key << "mu" << YAML::Value << fmt(s.mu);
  out << YAML::Key << "stddev" << YAML::Value << fmt(s.stddev);
  out << YAML::Key << "initial" << YAML::Value << fmt(s.initial);
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : s.terms) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "amplitude" << YAML::Value << fmt(t.amplitude);
    out << YAML::Key << "decay" << YAML::Value << fmt(t.decay);
    out << YAML::Key << "frequency" << YAML::Value << fmt(t.frequency);
    out << YAML::Key << "phase" << YAML::Value << fmt(t.phase);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

void emit_modes(YAML::Emitter& out, const FaultModes& modes) {
  out << YAML::BeginSeq;
  for (size_t a = 0; a < modes.size(); ++a) {
    if (modes[a].mode == ActuatorMode::Healthy) continue;
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "actuator" << YAML::Value << a + 1;
    out << YAML::Key << "mode" << YAML::Value << to_string(modes[a].mode);
    if (modes[a].mode == ActuatorMode::LOE || modes[a].mode == ActuatorMode::Stuck)
      out << YAML::Key << "value" << YAML::Value << fmt(modes[a].value);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

RunConfig from_node(const YAML::Node& root, const Reader& r) {
  RunConfig c;
  if (!root.IsMap()) r.fail(root, "the document must be a mapping");
  r.keys(root, {"version", "name", "seed", "plant", "leader", "topology", "design", "reconfig",
                "simulation", "initial", "disturbances", "faults", "analysis", "sweep"},
         "");
  if (!root["version"]) r.fail(root, "'version' is required");
  c.version = static_cast<int>(r.integer(root["version"], "version"));
  if (c.version != kConfigVersion)
    r.fail(root["version"], "unsupported version " + std::to_string(c.version));
  if (root["name"]) c.name = r.str(root["name"], "name");
  if (root["seed"]) c.seed = static_cast<std::uint64_t>(r.integer(root["seed"], "seed"));

  // plant
  Preset preset;
  if (auto p = root["plant"]) {
    r.keys(p, {"preset", "A", "B", "C", "Bw"}, "plant");
    if (p["preset"]) {
      if (p["A"] || p["B"] || p["C"] || p["Bw"]) r.fail(p, "'plant': give a preset or matrices, not both");
      c.plant_preset = r.str(p["preset"], "plant.preset");
      try {
        preset = preset_by_name(c.plant_preset);
      } catch (const Error& e) {
        r.fail(p["preset"], e.what());
      }
    } else {
      for (const char* k : {"A", "B", "C", "Bw"})
        if (!p[k]) r.fail(p, std::string("'plant.") + k + "' is required without a preset");
      c.plant_preset.clear();
      preset.model = {r.mat(p["A"], "plant.A"), r.mat(p["B"], "plant.B"), r.mat(p["C"], "plant.C"),
                      r.mat(p["Bw"], "plant.Bw")};
    }
  } else {
    preset = preset_by_name(c.plant_preset);
  }
  c.model = preset.model;
  try {
    validate_model(c.model);
  } catch (const Error& e) {
    r.fail(root["plant"] ? root["plant"] : root, e.what());
  }
  const int n = c.model.n(), m = c.model.m();

  // leader
  c.leader = preset.leader;
  if (auto l = root["leader"]) {
    r.keys(l, {"K0", "F0", "direction", "schedule", "u0M"}, "leader");
    if (l["K0"]) c.leader.K0 = r.mat(l["K0"], "leader.K0");
    if (l["F0"]) c.leader.F0 = r.mat(l["F0"], "leader.F0");
    if (l["direction"]) c.leader.direction = r.vec(l["direction"], "leader.direction");
    if (auto s = l["schedule"]) {
      if (!s.IsSequence()) r.fail(s, "'leader.schedule' must be a list of [t, value] pairs");
      c.leader.schedule.clear();
      for (const auto& e : s) {
        if (!e.IsSequence() || e.size() != 2) r.fail(e, "schedule entries are [t, value]");
        c.leader.schedule.push_back({r.num(e[0], "schedule.t"), r.num(e[1], "schedule.value")});
      }
      for (size_t k = 1; k < c.leader.schedule.size(); ++k)
        if (c.leader.schedule[k].t < c.leader.schedule[k - 1].t) r.fail(s, "schedule times must increase");
    }
    if (auto u = l["u0M"]) {
      if (u.IsScalar() && u.Scalar() == "auto") c.leader.u0M = 0.0;
      else c.leader.u0M = r.positive(u, "leader.u0M");
    }
  }
  if (c.plant_preset.empty() && (c.leader.K0.size() == 0 || c.leader.F0.size() == 0 || c.leader.direction.size() == 0))
    r.fail(root["leader"] ? root["leader"] : root, "explicit plants need leader.K0, leader.F0 and leader.direction");
  if (c.leader.K0.rows() != m || c.leader.K0.cols() != n || c.leader.F0.rows() != m ||
      c.leader.F0.cols() != n || c.leader.direction.size() != n)
    r.fail(root["leader"] ? root["leader"] : root, "leader matrices do not match the plant dimensions");

  // topology
  c.edges = {{1, 2}, {2, 3}, {1, 4}, {4, 5}, {3, 5}};
  c.pins = {1};
  if (auto t = root["topology"]) {
    r.keys(t, {"followers", "edges", "pins"}, "topology");
    if (t["followers"]) c.n_followers = static_cast<int>(r.integer(t["followers"], "topology.followers"));
    if (c.n_followers < 1) r.fail(t, "at least one follower is needed");
    if (auto e = t["edges"]) {
      if (!e.IsSequence()) r.fail(e, "'topology.edges' must be a list of [from, to] pairs");
      c.edges.clear();
      for (const auto& p : e) {
        if (!p.IsSequence() || p.size() != 2) r.fail(p, "edges are [from, to] pairs");
        c.edges.emplace_back(r.integer(p[0], "edge"), r.integer(p[1], "edge"));
      }
    }
    if (auto p = t["pins"]) {
      if (!p.IsSequence()) r.fail(p, "'topology.pins' must be a list");
      c.pins.clear();
      for (const auto& v : p) c.pins.push_back(static_cast<int>(r.integer(v, "pin")));
    }
    for (auto [a, b] : c.edges)
      if (a < 1 || b < 1 || a > c.n_followers || b > c.n_followers || a == b)
        r.fail(t, "edge [" + std::to_string(a) + ", " + std::to_string(b) + "] refers to a missing agent");
    for (int p : c.pins)
      if (p < 1 || p > c.n_followers) r.fail(t, "pin " + std::to_string(p) + " refers to a missing agent");
  }

  // design
  if (auto d = root["design"]) {
    r.keys(d, {"gamma", "gain_scale", "margin_eps", "safety", "gamma_rel_tol"}, "design");
    if (d["gamma"]) c.healthy.gamma = r.positive(d["gamma"], "design.gamma");
    if (d["gain_scale"]) c.healthy.gain_scale = r.num(d["gain_scale"], "design.gain_scale");
    if (d["margin_eps"]) c.healthy.margin_eps = r.positive(d["margin_eps"], "design.margin_eps");
    if (d["safety"]) c.healthy.safety = r.num(d["safety"], "design.safety");
    if (d["gamma_rel_tol"]) c.healthy.gamma_rel_tol = r.positive(d["gamma_rel_tol"], "design.gamma_rel_tol");
    if (!(c.healthy.safety > 1.0)) r.fail(d, "'design.safety' must exceed 1");
  }
  if (auto d = root["reconfig"]) {
    r.keys(d, {"feas_tol", "max_iter", "pd_floor", "exact_tol", "refine_matching", "pole_radius",
               "alpha_lo", "alpha_hi", "alpha_rel_width"},
           "reconfig");
    auto& o = c.reconfig;
    if (d["feas_tol"]) o.lmi.feas_tol = r.positive(d["feas_tol"], "reconfig.feas_tol");
    if (d["max_iter"]) o.lmi.max_iter = static_cast<int>(r.integer(d["max_iter"], "reconfig.max_iter"));
    if (d["pd_floor"]) o.lmi.pd_floor = r.positive(d["pd_floor"], "reconfig.pd_floor");
    if (d["exact_tol"]) o.exact_tol = r.positive(d["exact_tol"], "reconfig.exact_tol");
    if (d["refine_matching"]) o.refine_matching = r.flag(d["refine_matching"], "reconfig.refine_matching");
    if (d["pole_radius"]) o.pole_radius = r.num(d["pole_radius"], "reconfig.pole_radius");
    if (d["alpha_lo"]) o.alpha.lo = r.positive(d["alpha_lo"], "reconfig.alpha_lo");
    if (d["alpha_hi"]) o.alpha.hi = r.positive(d["alpha_hi"], "reconfig.alpha_hi");
    if (d["alpha_rel_width"]) o.alpha.rel_width = r.positive(d["alpha_rel_width"], "reconfig.alpha_rel_width");
    if (o.lmi.max_iter < 1 || o.alpha.lo >= o.alpha.hi || o.pole_radius < 0.0)
      r.fail(d, "'reconfig': invalid solver settings");
  }

  // simulation
  if (auto s = root["simulation"]) {
    r.keys(s, {"h", "horizon", "phi", "overflow_guard", "record_stride", "stage_control", "settle"},
           "simulation");
    auto& o = c.sim;
    if (s["h"]) o.h = r.positive(s["h"], "simulation.h");
    if (s["horizon"]) o.horizon = r.positive(s["horizon"], "simulation.horizon");
    if (s["phi"]) o.phi = r.num(s["phi"], "simulation.phi");
    if (s["overflow_guard"]) o.overflow_guard = r.positive(s["overflow_guard"], "simulation.overflow_guard");
    if (s["record_stride"]) o.record_stride = static_cast<int>(r.integer(s["record_stride"], "simulation.record_stride"));
    if (s["stage_control"]) o.stage_control = r.flag(s["stage_control"], "simulation.stage_control");
    if (s["settle"]) o.settle = r.num(s["settle"], "simulation.settle");
    if (o.phi < 0.0 || o.record_stride < 1 || o.settle < 0.0 || o.h > o.horizon)
      r.fail(s, "'simulation': phi, settle must be nonnegative, stride >= 1, h <= horizon");
  }

  // initial states
  c.initial.leader = Vec::Zero(n);
  if (auto in = root["initial"]) {
    r.keys(in, {"leader", "followers", "spread", "aux"}, "initial");
    if (in["leader"]) {
      c.initial.leader = r.vec(in["leader"], "initial.leader");
      if (c.initial.leader.size() != n) r.fail(in["leader"], "'initial.leader' must have one entry per state");
    }
    if (in["spread"]) c.initial.spread = r.num(in["spread"], "initial.spread");
    if (auto f = in["followers"]) {
      if (f.IsScalar()) {
        auto s = f.Scalar();
        if (s == "random") c.initial.followers = FollowerInit::Random;
        else if (s == "leader") c.initial.followers = FollowerInit::Leader;
        else r.fail(f, "'initial.followers' is random, leader or a list of states");
      } else {
        c.initial.followers = FollowerInit::Explicit;
        if (!f.IsSequence() || static_cast<int>(f.size()) != c.n_followers)
          r.fail(f, "'initial.followers' needs one state per follower");
        for (const auto& v : f) {
          c.initial.explicit_states.push_back(r.vec(v, "initial.followers"));
          if (c.initial.explicit_states.back().size() != n) r.fail(v, "follower state has the wrong size");
        }
      }
    }
    if (auto a = in["aux"]) {
      auto s = r.str(a, "initial.aux");
      if (s == "leader") c.initial.aux = AuxInit::Leader;
      else if (s == "agent") c.initial.aux = AuxInit::Agent;
      else r.fail(a, "'initial.aux' is leader or agent");
    }
    if (c.initial.spread < 0.0) r.fail(in, "'initial.spread' must be nonnegative");
  }

  // disturbances
  if (auto d = root["disturbances"]) {
    r.keys(d, {"mode", "suite", "leader", "followers"}, "disturbances");
    auto& dc = c.disturbances;
    std::string mode = d["mode"] ? r.str(d["mode"], "disturbances.mode") : "explicit";
    if (mode == "none") dc.mode = DisturbanceMode::None;
    else if (mode == "suite") dc.mode = DisturbanceMode::Suite;
    else if (mode == "explicit") dc.mode = DisturbanceMode::Explicit;
    else r.fail(d["mode"], "'disturbances.mode' is none, suite or explicit");
    if (d["suite"]) dc.suite = static_cast<int>(r.integer(d["suite"], "disturbances.suite"));
    if (dc.suite < 0 || dc.suite >= kSuiteSize)
      r.fail(d, "'disturbances.suite' must lie in [0, " + std::to_string(kSuiteSize - 1) + "]");
    if (d["leader"]) dc.leader = parse_disturbance(r, d["leader"], "disturbances.leader", c.seed * 1000);
    if (auto f = d["followers"]) {
      // empty: followers undisturbed
      if (!f.IsSequence() || (f.size() > 1 && static_cast<int>(f.size()) != c.n_followers))
        r.fail(f, "'disturbances.followers' needs no entry, one, or one per follower");
      for (size_t i = 0; i < f.size(); ++i)
        dc.followers.push_back(parse_disturbance(r, f[i], "disturbances.followers", c.seed * 1000 + i + 1));
    }
  }

  // faults
  if (auto fs = root["faults"]) {
    if (!fs.IsSequence()) r.fail(fs, "'faults' must be a list");
    std::set<int> agents;
    for (const auto& f : fs) {
      r.keys(f, {"agent", "t_f", "t_r", "report_delay", "truth", "estimate"}, "faults");
      if (!f["agent"] || !f["t_f"] || !f["truth"]) r.fail(f, "faults need agent, t_f and truth");
      FaultConfig fc;
      long a = r.integer(f["agent"], "faults.agent");
      if (a < 1 || a > c.n_followers) r.fail(f["agent"], "agent " + std::to_string(a) + " does not exist");
      if (!agents.insert(static_cast<int>(a)).second) r.fail(f["agent"], "one fault entry per agent");
      fc.agent = static_cast<int>(a - 1);
      fc.t_f = r.num(f["t_f"], "faults.t_f");
      if (f["t_r"]) fc.t_r = time_or_never(r, f["t_r"], "faults.t_r");
      if (f["report_delay"]) fc.report_delay = r.num(f["report_delay"], "faults.report_delay");
      fc.truth = parse_modes(r, f["truth"], m, "faults.truth");
      fc.estimate = f["estimate"] ? parse_modes(r, f["estimate"], m, "faults.estimate") : fc.truth;
      if (fc.t_f < 0.0 || fc.report_delay < 0.0) r.fail(f, "fault times must be nonnegative");
      if (fc.t_r < fc.t_f) r.fail(f, "t_r must not precede t_f");
      if (fc.t_f > c.sim.horizon || (std::isfinite(fc.t_r) && fc.t_r > c.sim.horizon))
        r.fail(f, "fault events must lie inside the horizon");
      c.faults.push_back(std::move(fc));
    }
  }

  if (auto a = root["analysis"]) {
    r.keys(a, {"severity_bound", "severity_weights", "recovery_delay", "x_M", "post_window"}, "analysis");
    auto& ac = c.analysis;
    if (a["severity_bound"]) ac.severity_bound = r.flag(a["severity_bound"], "analysis.severity_bound");
    if (a["severity_weights"]) {
      Vec w = r.vec(a["severity_weights"], "analysis.severity_weights");
      ac.severity_weights.assign(w.data(), w.data() + w.size());
    }
    if (a["recovery_delay"]) ac.recovery_delay = r.flag(a["recovery_delay"], "analysis.recovery_delay");
    if (auto x = a["x_M"]) {
      if (x.IsScalar() && x.Scalar() == "auto") ac.x_M = 0.0;
      else ac.x_M = r.positive(x, "analysis.x_M");
    }
    if (a["post_window"]) ac.post_window = r.positive(a["post_window"], "analysis.post_window");
  }

  if (auto s = root["sweep"]) {
    r.keys(s, {"parameter", "values"}, "sweep");
    if (s["parameter"]) c.sweep.parameter = r.str(s["parameter"], "sweep.parameter");
    if (s["values"]) {
      Vec v = r.vec(s["values"], "sweep.values");
      c.sweep.values.assign(v.data(), v.data() + v.size());
    }
    if (c.sweep.parameter.empty() != c.sweep.values.empty())
      r.fail(s, "'sweep' needs both a parameter and values");
  }
  return c;
}

}  // namespace

Override parse_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
  return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::vector<Override>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ConfigError, where(source, e.mark) + ": " + e.msg);
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& ov : overrides) set_path(root, ov);
  Reader r(source);
  try {
    return from_node(root, r);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ConfigError, where(source, e.mark) + ": " + e.msg);
  }
}

RunConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, overrides);
}

std::string dump_config(const RunConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << c.version;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "seed" << YAML::Value << c.seed;

  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  if (!c.plant_preset.empty()) {
    out << YAML::Key << "preset" << YAML::Value << c.plant_preset;
  } else {
    out << YAML::Key << "A" << YAML::Value; emit_mat(out, c.model.A);
    out << YAML::Key << "B" << YAML::Value; emit_mat(out, c.model.B);
    out << YAML::Key << "C" << YAML::Value; emit_mat(out, c.model.C);
    out << YAML::Key << "Bw" << YAML::Value; emit_mat(out, c.model.Bw);
  }
  out << YAML::EndMap;

  out << YAML::Key << "leader" << YAML::Value << YAML::BeginMap;
  if (c.plant_preset.empty()) {
    out << YAML::Key << "K0" << YAML::Value; emit_mat(out, c.leader.K0);
    out << YAML::Key << "F0" << YAML::Value; emit_mat(out, c.leader.F0);
    out << YAML::Key << "direction" << YAML::Value; emit_vec(out, c.leader.direction);
  }
  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : c.leader.schedule)
    out << YAML::Flow << YAML::BeginSeq << fmt(s.t) << fmt(s.value) << YAML::EndSeq;
  out << YAML::EndSeq;
  out << YAML::Key << "u0M" << YAML::Value << (c.leader.u0M > 0.0 ? fmt(c.leader.u0M) : std::string("auto"));
  out << YAML::EndMap;

  out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "followers" << YAML::Value << c.n_followers;
  out << YAML::Key << "edges" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto [a, b] : c.edges) out << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
  out << YAML::EndSeq;
  out << YAML::Key << "pins" << YAML::Value << YAML::Flow << c.pins;
  out << YAML::EndMap;

  out << YAML::Key << "design" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gamma" << YAML::Value << fmt(c.healthy.gamma);
  out << YAML::Key << "gain_scale" << YAML::Value << fmt(c.healthy.gain_scale);
  out << YAML::Key << "margin_eps" << YAML::Value << fmt(c.healthy.margin_eps);
  out << YAML::Key << "safety" << YAML::Value << fmt(c.healthy.safety);
  out << YAML::Key << "gamma_rel_tol" << YAML::Value << fmt(c.healthy.gamma_rel_tol);
  out << YAML::EndMap;

  const auto& ro = c.reconfig;
  out << YAML::Key << "reconfig" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "feas_tol" << YAML::Value << fmt(ro.lmi.feas_tol);
  out << YAML::Key << "max_iter" << YAML::Value << ro.lmi.max_iter;
  out << YAML::Key << "pd_floor" << YAML::Value << fmt(ro.lmi.pd_floor);
  out << YAML::Key << "exact_tol" << YAML::Value << fmt(ro.exact_tol);
  out << YAML::Key << "refine_matching" << YAML::Value << ro.refine_matching;
  out << YAML::Key << "pole_radius" << YAML::Value << fmt(ro.pole_radius);
  out << YAML::Key << "alpha_lo" << YAML::Value << fmt(ro.alpha.lo);
  out << YAML::Key << "alpha_hi" << YAML::Value << fmt(ro.alpha.hi);
  out << YAML::Key << "alpha_rel_width" << YAML::Value << fmt(ro.alpha.rel_width);
  out << YAML::EndMap;

  const auto& so = c.sim;
  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "h" << YAML::Value << fmt(so.h);
  out << YAML::Key << "horizon" << YAML::Value << fmt(so.horizon);
  out << YAML::Key << "phi" << YAML::Value << fmt(so.phi);
  out << YAML::Key << "overflow_guard" << YAML::Value << fmt(so.overflow_guard);
  out << YAML::Key << "record_stride" << YAML::Value << so.record_stride;
  out << YAML::Key << "stage_control" << YAML::Value << so.stage_control;
  out << YAML::Key << "settle" << YAML::Value << fmt(so.settle);
  out << YAML::EndMap;

  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "leader" << YAML::Value; emit_vec(out, c.initial.leader);
  out << YAML::Key << "followers" << YAML::Value;
  switch (c.initial.followers) {
    case FollowerInit::Random: out << "random"; break;
    case FollowerInit::Leader: out << "leader"; break;
    case FollowerInit::Explicit:
      out << YAML::BeginSeq;
      for (const auto& v : c.initial.explicit_states) emit_vec(out, v);
      out << YAML::EndSeq;
      break;
  }
  out << YAML::Key << "spread" << YAML::Value << fmt(c.initial.spread);
  out << YAML::Key << "aux" << YAML::Value << (c.initial.aux == AuxInit::Leader ? "leader" : "agent");
  out << YAML::EndMap;

  const auto& dc = c.disturbances;
  out << YAML::Key << "disturbances" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value
      << (dc.mode == DisturbanceMode::None ? "none" : dc.mode == DisturbanceMode::Suite ? "suite" : "explicit");
  out << YAML::Key << "suite" << YAML::Value << dc.suite;
  out << YAML::Key << "leader" << YAML::Value; emit_disturbance(out, dc.leader);
  out << YAML::Key << "followers" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : dc.followers) emit_disturbance(out, f);
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "faults" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : c.faults) {
    out << YAML::BeginMap;
    out << YAML::Key << "agent" << YAML::Value << f.agent + 1;
    out << YAML::Key << "t_f" << YAML::Value << fmt(f.t_f);
    out << YAML::Key << "t_r" << YAML::Value << (std::isfinite(f.t_r) ? fmt(f.t_r) : std::string("never"));
    out << YAML::Key << "report_delay" << YAML::Value << fmt(f.report_delay);
    out << YAML::Key << "truth" << YAML::Value; emit_modes(out, f.truth);
    out << YAML::Key << "estimate" << YAML::Value; emit_modes(out, f.estimate);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& ac = c.analysis;
  out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "severity_bound" << YAML::Value << ac.severity_bound;
  out << YAML::Key << "severity_weights" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : ac.severity_weights) out << fmt(w);
  out << YAML::EndSeq;
  out << YAML::Key << "recovery_delay" << YAML::Value << ac.recovery_delay;
  out << YAML::Key << "x_M" << YAML::Value << (ac.x_M > 0.0 ? fmt(ac.x_M) : std::string("auto"));
  out << YAML::Key << "post_window" << YAML::Value << fmt(ac.post_window);
  out << YAML::EndMap;

  if (!c.sweep.parameter.empty()) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "parameter" << YAML::Value << c.sweep.parameter;
    out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : c.sweep.values) out << fmt(v);
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Topology config_topology(const RunConfig& cfg) { return build_topology(cfg.n_followers, cfg.edges, cfg.pins); }

}  // namespace ftmas
