#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmeta/errors.hpp"
#include "rmeta/experiment.hpp"
#include "rmeta/io_util.hpp"

namespace {

int cmd_train(const std::string& config_path) {
  const rmeta::harness::ExperimentResult res = rmeta::harness::run_experiment_file(config_path);
  std::cout << "trained " << rmeta::criteria::to_string(res.config.criterion) << "/"
            << rmeta::opt::to_string(res.config.optimizer) << " for " << res.config.iterations
            << " iterations; results in " << res.config.output_dir << "/results.csv\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, int k, int n_tasks, std::uint64_t seed, const std::string& out) {
  const rmeta::harness::Checkpoint cp = rmeta::harness::load_checkpoint(checkpoint);
  const rmeta::tasks::TaskRange er = rmeta::tasks::eval_range(cp.config.distribution);
  std::vector<double> stds;
  const rmeta::meta::AdaptationCurve curve =
      rmeta::meta::evaluate_fast_adaptation(cp.state, er, k, n_tasks, seed, cp.config.exec, &stds);

  std::vector<rmeta::harness::ResultRow> rows;
  for (int step = 1; step <= rmeta::meta::kCurveSteps; ++step) {
    rmeta::harness::ResultRow row;
    row.criterion = rmeta::criteria::to_string(cp.config.criterion);
    row.optimizer = rmeta::opt::to_string(cp.config.optimizer);
    row.distribution = cp.config.distribution == rmeta::tasks::Distribution::identical ? "identical" : "skewed";
    row.k = k;
    row.step = step;
    row.mean_mse = curve.mse_by_step[static_cast<std::size_t>(step - 1)];
    row.std_mse = stds[static_cast<std::size_t>(step - 1)];
    row.n_tasks = n_tasks;
    row.seed = seed;
    rows.push_back(row);
  }
  const std::string csv = rmeta::harness::results_to_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    rmeta::io::atomic_write_text(out, csv);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_game_demo(const std::string& opt_name, double eta, int steps, const std::string& start,
                  const std::string& out) {
  const std::size_t comma = start.find(',');
  if (comma == std::string::npos) throw rmeta::ConfigError("--start expects two comma-separated numbers");
  const double theta0 = std::stod(start.substr(0, comma));
  const double alpha0 = std::stod(start.substr(comma + 1));
  const std::vector<rmeta::harness::TrajectoryPoint> traj =
      rmeta::harness::game_demo(rmeta::opt::opt_mode_from_string(opt_name), eta, steps, theta0, alpha0);
  const std::string csv = rmeta::harness::trajectory_to_csv(traj);
  if (out.empty()) {
    std::cout << csv;
  } else {
    rmeta::io::atomic_write_text(out, csv);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& out_csv) {
  const rmeta::harness::CompareReport rep = rmeta::harness::compare_report(paths);
  std::cout << rep.text;
  if (!out_csv.empty()) {
    rmeta::io::atomic_write_text(out_csv, rep.csv);
    std::cout << "wrote " << out_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robustmeta: meta-learning under Bayes/Minimax/Neyman-Pearson criteria"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* train = app.add_subcommand("train", "train per a JSON config and emit results.csv");
  train->add_option("config", config_path, "experiment config (JSON)")->required();

  std::string checkpoint;
  int k = 10;
  int n_tasks = 100;
  std::uint64_t seed = 1;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "k-shot fast adaptation from a checkpoint");
  eval->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--k", k, "shots");
  eval->add_option("--tasks", n_tasks, "evaluation task count");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--out", eval_out, "write CSV here instead of stdout");

  std::string game = "bilinear";
  std::string opt_name = "gda";
  double eta = 0.1;
  int steps = 100;
  std::string start = "1,1";
  std::string demo_out;
  CLI::App* demo = app.add_subcommand("game-demo", "iterate an optimizer on the bilinear game");
  demo->add_option("--game", game, "game name (bilinear)")->check(CLI::IsMember({"bilinear"}));
  demo->add_option("--opt", opt_name, "optimizer")->check(CLI::IsMember({"gda", "sga", "asga"}));
  demo->add_option("--eta", eta, "step size");
  demo->add_option("--steps", steps, "number of steps");
  demo->add_option("--start", start, "starting point as theta,alpha");
  demo->add_option("--out", demo_out, "write CSV here instead of stdout");

  std::vector<std::string> report_paths;
  std::string report_out = "report.csv";
  CLI::App* report = app.add_subcommand("report", "summarize and compare result files");
  report->add_option("csv", report_paths, "results.csv files")->required()->expected(-2);
  report->add_option("--out", report_out, "summary CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path);
    if (*eval) return cmd_eval(checkpoint, k, n_tasks, seed, eval_out);
    if (*demo) return cmd_game_demo(opt_name, eta, steps, start, demo_out);
    if (*report) return cmd_report(report_paths, report_out);
  } catch (const rmeta::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rmeta::NonFiniteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
