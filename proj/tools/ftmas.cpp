// ftmas: synthesize gains, simulate the team, run the built-in scenarios and
// parameter sweeps, emit plotting scripts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ftmas/error.hpp"
#include "ftmas/report.hpp"

namespace fs = std::filesystem;
using namespace ftmas;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<long long> seed;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration (YAML)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "overrides the config seed");
  cmd->add_option("--set", c.sets, "key=value override, dotted path (repeatable)");
}

std::vector<Override> overrides(const Common& c) {
  std::vector<Override> ov;
  for (const auto& s : c.sets) ov.push_back(parse_override(s));
  if (c.seed) ov.emplace_back("seed", std::to_string(*c.seed));
  return ov;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void simulate_and_write(const RunConfig& cfg, const fs::path& out) {
  write_file((out / "config.yaml").string(), dump_config(cfg));
  auto r = execute_run(cfg);
  {
    std::ofstream csv(out / "trace.csv", std::ios::binary);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write trace.csv");
    write_trace_csv(csv, r.trace);
  }
  write_file((out / "summary.json").string(), run_summary(r).dump(2) + "\n");
  const auto& m = r.trace.metrics;
  std::cout << cfg.name << ": t_end " << m.t_end << " s, diverged " << (m.diverged ? "yes" : "no") << "\n";
  for (size_t i = 0; i < m.agents.size(); ++i) {
    const auto& a = m.agents[i];
    std::cout << "  agent " << i + 1 << ": ";
    if (a.diverged) std::cout << "diverged at t = " << a.t_diverged << " s";
    else std::cout << "output error " << a.final_output_error << ", aux error " << a.final_aux_error;
    std::cout << "\n";
  }
  std::cout << "wrote " << (out / "trace.csv").string() << " and " << (out / "summary.json").string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Fault-tolerant consensus for leader-follower teams"};
  app.require_subcommand(1);

  Common syn, sim, scen, swp;
  auto* c_syn = app.add_subcommand("synthesize", "healthy and reconfigured gains with certificates");
  add_common(c_syn, syn, true);
  auto* c_sim = app.add_subcommand("simulate", "closed-loop run: trace CSV and summary JSON");
  add_common(c_sim, sim, true);

  auto* c_scen = app.add_subcommand("scenario", "run a built-in scenario preset");
  std::string scen_name;
  bool preset_only = false;
  c_scen->add_option("name", scen_name, "1, 2, 3, 4.1 or 4.2")->required();
  c_scen->add_flag("--preset-only", preset_only, "write the preset config and stop");
  add_common(c_scen, scen, false);

  auto* c_swp = app.add_subcommand("sweep", "vary one parameter and tabulate outcome flags");
  add_common(c_swp, swp, true);
  std::string sweep_param;
  std::vector<double> sweep_values;
  c_swp->add_option("--parameter", sweep_param, "dotted path of the swept value");
  c_swp->add_option("--values", sweep_values, "grid of values");

  auto* c_plot = app.add_subcommand("plots", "gnuplot scripts for traces and sweeps");
  std::string plot_dir, plot_out;
  c_plot->add_option("--traces", plot_dir, "directory holding trace.csv / sweep.csv")->required();
  c_plot->add_option("--out", plot_out, "script directory (default: the trace directory)");

  CLI11_PARSE(app, argc, argv);

  if (*c_syn) {
    auto cfg = load_config(syn.config, overrides(syn));
    auto out = prepare_out(syn.out);
    auto prep = prepare_run(cfg);
    write_file((out / "config.yaml").string(), dump_config(cfg));
    write_file((out / "gains.json").string(), synthesis_summary(prep).dump(2) + "\n");
    const auto& h = prep.setup.healthy;
    std::cout << "healthy: gamma " << h.gamma << ", certificate " << h.certificate << ", c1 " << h.c1 << "\n";
    for (const auto& f : prep.setup.faults)
      std::cout << "agent " << f.spec.agent + 1 << ": gamma_f " << f.gains->gamma_f << ", exact "
                << (f.gains->exact ? "yes" : "no") << "\n";
    std::cout << "wrote " << (out / "gains.json").string() << "\n";
  } else if (*c_sim) {
    auto cfg = load_config(sim.config, overrides(sim));
    simulate_and_write(cfg, prepare_out(sim.out));
  } else if (*c_scen) {
    std::string text = scenario_preset(scen_name);
    std::string source = "scenario-" + scen_name;
    if (!scen.config.empty()) throw Error(ErrorCode::ConfigError, "scenario takes no --config; use --set");
    auto cfg = parse_config(text, source, overrides(scen));
    auto out = prepare_out(scen.out);
    write_file((out / (source + ".yaml")).string(), dump_config(cfg));
    if (preset_only) {
      std::cout << "wrote " << (out / (source + ".yaml")).string() << "\n";
      return 0;
    }
    simulate_and_write(cfg, out);
  } else if (*c_swp) {
    auto cfg = load_config(swp.config, overrides(swp));
    if (!sweep_param.empty()) cfg.sweep.parameter = sweep_param;
    if (!sweep_values.empty()) cfg.sweep.values = sweep_values;
    auto out = prepare_out(swp.out);
    auto points = run_sweep(cfg);
    write_sweep_csv((out / "sweep.csv").string(), points);
    write_file((out / "sweep.json").string(), sweep_summary(cfg, points).dump(2) + "\n");
    for (const auto& p : points)
      std::cout << cfg.sweep.parameter << " = " << p.value << ": " << (p.stable() ? "stable" : "unstable")
                << " (max Re " << p.worst_true_max_real << ")\n";
    auto v = sweep_verdict(points);
    std::cout << (v.monotone_threshold ? "threshold between " + std::to_string(*v.last_stable) + " and " +
                                             std::to_string(*v.first_unstable)
                                       : std::string("no stability threshold on this grid"))
              << "\n";
  } else if (*c_plot) {
    if (!fs::is_directory(plot_dir)) throw Error(ErrorCode::IoError, "no such directory '" + plot_dir + "'");
    std::string out = plot_out.empty() ? plot_dir : prepare_out(plot_out).string();
    int count = 0;
    for (const auto& e : fs::directory_iterator(plot_dir)) {
      if (e.path().extension() != ".csv") continue;
      std::ifstream in(e.path());
      std::string header;
      std::getline(in, header);
      if (header.rfind("t,", 0) == 0) {
        for (const auto& p : write_trace_plots(e.path().string(), out)) std::cout << "wrote " << p << "\n";
        ++count;
      } else if (header.rfind("value,", 0) == 0) {
        std::cout << "wrote " << write_sweep_plot(e.path().string(), out) << "\n";
        ++count;
      }
    }
    if (count == 0) throw Error(ErrorCode::IoError, "no trace or sweep files in '" + plot_dir + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
