#pragma once

#include <string>
#include <vector>

#include "rmeta/config.hpp"
#include "rmeta/metalearn.hpp"

namespace rmeta::harness {

struct ResultRow {
  std::string criterion;
  std::string optimizer;
  std::string distribution;
  int k = 0;
  int step = 0;  // 1..kCurveSteps
  double mean_mse = 0.0;
  double std_mse = 0.0;
  int n_tasks = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kResultsHeader = "criterion,optimizer,distribution,k,step,mean_mse,std_mse,n_tasks,seed";

std::string results_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> results_from_csv_file(const std::string& path);

// Paper-style method labels: B, MM, NP, with '+' for the ASGA-optimized
// variants.
std::string method_label(const std::string& criterion, const std::string& optimizer);

// Trains per config, sweeps fast adaptation over every k in k_shots, and
// writes results.csv, log.jsonl, config.resolved.json and a checkpoint under
// cfg.output_dir.
struct ExperimentResult {
  ExperimentConfig config;
  meta::MetaState state;
  std::vector<ResultRow> rows;
};
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment_file(const std::string& config_path);

// Checkpoint directory: model.bin(+.json sidecar), opt.json, meta.json.
void save_checkpoint(const meta::MetaState& state, const ExperimentConfig& cfg, const std::string& dir);
struct Checkpoint {
  meta::MetaState state;
  ExperimentConfig config;
};
Checkpoint load_checkpoint(const std::string& dir);

// Bilinear-game optimizer demo: iterates the chosen optimizer on
// R(theta, alpha) = theta * alpha and reports one row per step.
struct TrajectoryPoint {
  int step = 0;
  double theta = 0.0;
  double alpha = 0.0;
  double norm = 0.0;
};
std::vector<TrajectoryPoint> game_demo(opt::OptMode mode, double eta, int steps, double theta0, double alpha0);
std::string trajectory_to_csv(const std::vector<TrajectoryPoint>& traj);

// Cross-method summary at the final adaptation step. Cells are grouped by
// (distribution, k) and methods aggregated across seeds.
struct CompareReport {
  std::string text;  // human-readable table
  std::string csv;
};
CompareReport compare_report(const std::vector<std::string>& csv_paths);

}  // namespace rmeta::harness
