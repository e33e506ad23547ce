#pragma once

// JSON summaries (gains, certificates, metrics, flags) and gnuplot scripts
// for trace and sweep files.

#include <string>
#include <vector>

#include "json.hpp"

#include "ftmas/scenario.hpp"

namespace ftmas {

using Json = nlohmann::ordered_json;

// FNV-1a over the raw doubles, hex; identifies a matrix without printing it.
std::string digest(const Mat& M);

Json to_json(const Mat& M);
Json healthy_json(const HealthyGains& g);
Json reconfig_json(const ReconfigGains& g);
Json metrics_json(const SimMetrics& m);
Json analysis_json(const PlanAnalysis& a);

// `synthesize`: gains and certificates only.
Json synthesis_summary(const PreparedRun& prep);
// `simulate` / `scenario`
Json run_summary(const RunResult& r);
Json sweep_summary(const RunConfig& cfg, const std::vector<SweepPoint>& points);

void write_file(const std::string& path, const std::string& content);

// State families of the sentry model: surge, sway, yaw rate, yaw.
std::vector<std::string> state_family_names(int n);

// One script per state family, each plotting the leader and every follower
// from the trace CSV. Returns the written paths.
std::vector<std::string> write_trace_plots(const std::string& trace_csv, const std::string& out_dir);
// Stability verdict against the swept parameter.
std::string write_sweep_plot(const std::string& sweep_csv, const std::string& out_dir);

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points);

}  // namespace ftmas
