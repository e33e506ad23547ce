#include "ftmas/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "ftmas/error.hpp"

namespace ftmas {

namespace fs = std::filesystem;

namespace {

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Json eig_json(const Mat& A) {
  auto s = spectral(A);
  Json a = Json::array();
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    a.push_back({num(s.eigenvalues(i).real()), num(s.eigenvalues(i).imag())});
  return a;
}

Json modes_json(const FaultModes& modes) {
  Json a = Json::array();
  for (const auto& f : modes) a.push_back({{"mode", to_string(f.mode)}, {"value", f.value}});
  return a;
}

}  // namespace

std::string digest(const Mat& M) {
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index k = 0; k < M.size(); ++k) {
    double v = M.data()[k];
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const Mat& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) rows.push_back(vec_json(M.row(i).transpose()));
  return rows;
}

Json healthy_json(const HealthyGains& g) {
  return {
      {"gamma", num(g.gamma)},
      {"certificate", num(g.certificate)},
      {"c1", num(g.c1)},
      {"c3", num(g.coupling.c3)},
      {"c2", vec_json(g.coupling.c2)},
      {"c0", vec_json(g.coupling.c0)},
      {"c2_scale", num(g.c2_scale)},
      {"u0M", num(g.u0M)},
      {"P", to_json(g.P)},
      {"K", to_json(g.K)},
      {"P_digest", digest(g.P)},
      {"K_digest", digest(g.K)},
      {"P_min_eig", num(min_sym_eig(g.P))},
  };
}

Json reconfig_json(const ReconfigGains& g) {
  Json j;
  j["remaining"] = g.partition.remaining;
  j["outage"] = g.partition.outage;
  j["stuck"] = g.partition.stuck;
  j["invariant_dim"] = g.dec.k;
  j["alpha"] = num(g.alpha);
  j["gamma_f"] = num(g.gamma_f);
  j["lmi_margin"] = num(g.lmi_margin);
  j["exact"] = g.exact;
  j["fallback"] = g.fallback;
  j["friend_residual"] = num(g.friend_residual);
  j["matching_residual"] = num(g.matching_residual);
  j["stuck_residual"] = num(g.stuck_residual);
  j["feasibility_calls"] = g.feasibility_calls;
  j["K1r"] = to_json(g.K1r);
  j["K2r"] = to_json(g.K2r);
  j["u_C"] = vec_json(g.u_C);
  j["K1r_digest"] = digest(g.K1r);
  j["K2r_digest"] = digest(g.K2r);
  return j;
}

Json metrics_json(const SimMetrics& m) {
  Json j;
  j["diverged"] = m.diverged;
  j["aborted"] = m.aborted;
  j["t_end"] = m.t_end;
  j["team_state_energy"] = num(m.team_state_energy);
  j["team_disturbance_energy"] = num(m.team_disturbance_energy);
  j["team_ratio"] = m.team_ratio ? num(*m.team_ratio) : Json("not applicable");
  j["max_leader_input"] = num(m.max_leader_input);
  j["lemma1_residual"] = num(m.lemma1_residual);
  j["final_reference"] = num(m.final_reference);
  Json agents = Json::array();
  for (size_t i = 0; i < m.agents.size(); ++i) {
    const auto& a = m.agents[i];
    agents.push_back({
        {"agent", i + 1},
        {"diverged", a.diverged},
        {"t_diverged", num(a.t_diverged)},
        {"final_tracking_error", num(a.final_tracking_error)},
        {"final_output_error", num(a.final_output_error)},
        {"final_aux_error", num(a.final_aux_error)},
        {"final_consensus_error", num(a.final_consensus_error)},
        {"max_state_norm", num(a.max_state_norm)},
        {"max_z_after_recovery", num(a.max_z_after_recovery)},
        {"final_z", num(a.final_z)},
        {"faulty_state_energy", num(a.faulty_state_energy)},
        {"faulty_disturbance_energy", num(a.faulty_disturbance_energy)},
        {"faulty_ratio", a.faulty_ratio ? num(*a.faulty_ratio) : Json("not applicable")},
    });
  }
  j["agents"] = agents;
  return j;
}

Json analysis_json(const PlanAnalysis& a) {
  Json j;
  j["agent"] = a.agent + 1;
  j["h_inf_check"] = num(a.h_inf_check);
  j["nominal_max_real"] = num(a.nominal_max_real);
  j["true_max_real"] = num(a.true_max_real);
  j["eps_actual"] = vec_json(a.eps_actual);
  if (a.severity) {
    j["eps_max"] = vec_json(a.severity->eps_max);
    j["budget"] = num(a.severity->budget);
    j["sensitivity"] = vec_json(a.severity->sensitivity);
    j["within_bound"] = a.within_bound;
  } else if (!a.severity_note.empty()) {
    j["severity_note"] = a.severity_note;
  }
  j["eta"] = vec_json(a.eta);
  j["predicted_output_offset"] = vec_json(a.predicted_offset);
  if (a.delay) j["max_recovery_delay"] = num(*a.delay);
  if (!a.delay_note.empty()) j["recovery_delay_note"] = a.delay_note;
  return j;
}

Json synthesis_summary(const PreparedRun& prep) {
  Json j;
  j["name"] = prep.config.name;
  j["u0M_auto"] = prep.u0M_auto;
  j["healthy"] = healthy_json(prep.setup.healthy);
  j["healthy_seconds"] = prep.healthy_seconds;
  j["reconfig_seconds"] = prep.reconfig_seconds;
  Json plans = Json::array();
  for (size_t i = 0; i < prep.setup.faults.size(); ++i) {
    const auto& f = prep.setup.faults[i];
    Json p;
    p["agent"] = f.spec.agent + 1;
    p["t_f"] = f.spec.t_f;
    p["t_r"] = num(f.t_r);
    p["truth"] = modes_json(f.spec.truth);
    p["estimate"] = modes_json(f.spec.estimate);
    p["gains"] = reconfig_json(*f.gains);
    p["closed_loop_eigenvalues"] = eig_json(prep.setup.model.A + f.gains->partition.Br * f.gains->K1r);
    p["analysis"] = analysis_json(analyze_plan(prep, static_cast<int>(i)));
    plans.push_back(p);
  }
  j["faults"] = plans;
  return j;
}

Json run_summary(const RunResult& r) {
  Json j;
  j["name"] = r.prep.config.name;
  j["u0M_auto"] = r.prep.u0M_auto;
  j["healthy"] = healthy_json(r.prep.setup.healthy);
  Json plans = Json::array();
  for (size_t i = 0; i < r.prep.setup.faults.size(); ++i) {
    const auto& f = r.prep.setup.faults[i];
    Json p;
    p["agent"] = f.spec.agent + 1;
    p["t_f"] = f.spec.t_f;
    p["t_r"] = num(f.t_r);
    p["truth"] = modes_json(f.spec.truth);
    p["estimate"] = modes_json(f.spec.estimate);
    p["gains"] = reconfig_json(*f.gains);
    p["analysis"] = analysis_json(r.analyses[i]);
    plans.push_back(p);
  }
  j["faults"] = plans;
  if (r.x_M > 0.0) {
    j["x_M"] = r.x_M;
    j["healthy_peak_norm"] = r.healthy_peak_norm;
  }
  Json ev = Json::array();
  for (const auto& e : r.trace.events)
    ev.push_back({{"t", e.t}, {"kind", to_string(e.kind)}, {"agent", e.agent >= 0 ? Json(e.agent + 1) : Json()},
                  {"value", e.value}});
  j["events"] = ev;
  j["metrics"] = metrics_json(r.trace.metrics);
  Json flags;
  std::vector<int> div;
  for (size_t i = 0; i < r.trace.metrics.agents.size(); ++i)
    if (r.trace.metrics.agents[i].diverged) div.push_back(static_cast<int>(i) + 1);
  flags["diverged"] = r.trace.metrics.diverged;
  flags["diverged_agents"] = div;
  flags["aborted"] = r.trace.metrics.aborted;
  j["flags"] = flags;
  return j;
}

Json sweep_summary(const RunConfig& cfg, const std::vector<SweepPoint>& points) {
  Json j;
  j["name"] = cfg.name;
  j["parameter"] = cfg.sweep.parameter;
  Json a = Json::array();
  for (const auto& p : points)
    a.push_back({{"value", p.value},
                 {"stable", p.stable()},
                 {"diverged", p.diverged},
                 {"true_loops_hurwitz", p.true_loops_hurwitz},
                 {"worst_true_max_real", num(p.worst_true_max_real)},
                 {"max_final_output_error", num(p.max_final_output_error)},
                 {"max_final_z", num(p.max_final_z)}});
  j["points"] = a;
  auto v = sweep_verdict(points);
  j["threshold_found"] = v.monotone_threshold;
  j["last_stable"] = v.last_stable ? Json(*v.last_stable) : Json();
  j["first_unstable"] = v.first_unstable ? Json(*v.first_unstable) : Json();
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::vector<std::string> state_family_names(int n) {
  std::vector<std::string> names{"surge", "sway", "yaw_rate", "yaw"};
  if (n != 4) {
    names.clear();
    for (int k = 0; k < n; ++k) names.push_back("state" + std::to_string(k));
  }
  return names;
}

std::vector<std::string> write_trace_plots(const std::string& trace_csv, const std::string& out_dir) {
  std::ifstream in(trace_csv);
  if (!in) throw Error(ErrorCode::IoError, "missing trace file '" + trace_csv + "'");
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  std::stringstream ss(header);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  if (cols.empty() || cols[0] != "t") throw Error(ErrorCode::IoError, "'" + trace_csv + "' is not a trace file");

  std::set<int> agents;
  int n = 0;
  std::regex re("^x([0-9]+)_([0-9]+)$");
  for (const auto& c : cols) {
    std::smatch m;
    if (!std::regex_match(c, m, re)) continue;
    int a = std::stoi(m[1]), k = std::stoi(m[2]);
    if (a > 0) agents.insert(a);
    n = std::max(n, k + 1);
  }
  if (n == 0) throw Error(ErrorCode::IoError, "'" + trace_csv + "' has no state columns");

  auto names = state_family_names(n);
  std::string stem = fs::path(trace_csv).stem().string();
  std::string data = fs::absolute(trace_csv).string();
  std::vector<std::string> written;
  for (int k = 0; k < n; ++k) {
    std::ostringstream g;
    g << "# " << names[k] << " of the leader and every follower\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 1000,600\n"
      << "set output '" << stem << "_" << names[k] << ".png'\n"
      << "set xlabel 't [s]'\nset ylabel '" << names[k] << "'\nset grid\nset key outside right\n"
      << "plot '" << data << "' using 't':'x0_" << k << "' with lines lw 2 title 'leader'";
    for (int a : agents)
      g << ", \\\n     '' using 't':'x" << a << "_" << k << "' with lines title 'agent " << a << "'";
    g << "\n";
    std::string path = (fs::path(out_dir) / (stem + "_" + names[k] + ".gp")).string();
    write_file(path, g.str());
    written.push_back(path);
  }
  return written;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "value,stable,diverged,true_loops_hurwitz,worst_true_max_real,max_final_output_error,max_final_z\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.10g,%d,%d,%d,%.10g,%.10g,%.10g\n", p.value, p.stable() ? 1 : 0,
                  p.diverged ? 1 : 0, p.true_loops_hurwitz ? 1 : 0, p.worst_true_max_real,
                  p.max_final_output_error, p.max_final_z);
    os << buf;
  }
  write_file(path, os.str());
}

std::string write_sweep_plot(const std::string& sweep_csv, const std::string& out_dir) {
  if (!fs::exists(sweep_csv)) throw Error(ErrorCode::IoError, "missing sweep file '" + sweep_csv + "'");
  std::string stem = fs::path(sweep_csv).stem().string();
  std::ostringstream g;
  g << "# stability verdict (1 = stable) and worst closed-loop real part per swept value\n"
    << "set datafile separator ','\n"
    << "set terminal pngcairo size 1000,600\n"
    << "set output '" << stem << "_verdict.png'\n"
    << "set xlabel 'swept value'\nset ylabel 'stable'\nset y2label 'max Re(lambda)'\n"
    << "set yrange [-0.1:1.1]\nset ytics 0,1,1\nset y2tics\nset grid\n"
    << "plot '" << fs::absolute(sweep_csv).string() << "' using 'value':'stable' with steps lw 2 title 'stable', \\\n"
    << "     '' using 'value':'worst_true_max_real' axes x1y2 with linespoints title 'max Re(lambda)'\n";
  std::string path = (fs::path(out_dir) / (stem + "_verdict.gp")).string();
  write_file(path, g.str());
  return path;
}

}  // namespace ftmas
