#include "rmeta/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rmeta/errors.hpp"
#include "rmeta/io_util.hpp"

namespace rmeta::harness {

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += "\r\n";
  for (const ResultRow& r : rows) {
    out += r.criterion + "," + r.optimizer + "," + r.distribution + "," + std::to_string(r.k) + "," +
           std::to_string(r.step) + "," + io::format_double(r.mean_mse) + "," + io::format_double(r.std_mse) +
           "," + std::to_string(r.n_tasks) + "," + std::to_string(r.seed);
    out += "\r\n";
  }
  return out;
}

std::vector<ResultRow> results_from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty results file " + path);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != kResultsHeader) throw ConfigError("unexpected results header in " + path);

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw ConfigError("malformed results row in " + path + ": " + line);
    ResultRow r;
    r.criterion = fields[0];
    r.optimizer = fields[1];
    r.distribution = fields[2];
    r.k = std::stoi(fields[3]);
    r.step = std::stoi(fields[4]);
    r.mean_mse = std::stod(fields[5]);
    r.std_mse = std::stod(fields[6]);
    r.n_tasks = std::stoi(fields[7]);
    r.seed = std::stoull(fields[8]);
    rows.push_back(r);
  }
  return rows;
}

std::string method_label(const std::string& criterion, const std::string& optimizer) {
  std::string base;
  if (criterion == "bayes") {
    base = "B";
  } else if (criterion == "minimax") {
    base = "MM";
  } else if (criterion == "neyman_pearson") {
    base = "NP";
  } else {
    base = criterion;
  }
  if (optimizer == "asga") return base + "+";
  if (optimizer == "sga") return base + "(sga)";
  return base;
}

void save_checkpoint(const meta::MetaState& state, const ExperimentConfig& cfg, const std::string& dir) {
  io::ensure_dir(dir);
  model::save_params(state.params.params, dir + "/model.bin");
  io::atomic_write_text(dir + "/opt.json", opt::opt_state_to_json(state.opt) + "\n");

  nlohmann::json j;
  j["iteration"] = state.iteration;
  j["eta_u"] = io::base64_encode(state.eta_u);
  j["adversary"] = {{"kind", static_cast<int>(state.adversary.kind)},
                    {"r", state.adversary.r},
                    {"tau_u_amp", io::base64_encode(state.adversary.tau_u_amp)},
                    {"tau_u_phase", io::base64_encode(state.adversary.tau_u_phase)},
                    {"lambda_u", io::base64_encode(state.adversary.lambda_u)}};
  j["config"] = nlohmann::json::parse(config_to_json_text(cfg));
  io::atomic_write_text(dir + "/meta.json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw ConfigError("cannot open checkpoint " + dir + "/meta.json");
  nlohmann::json j = nlohmann::json::parse(in);

  Checkpoint cp;
  cp.config = config_from_json_text(j.at("config").dump());
  cp.state.cfg = cp.config.model;
  cp.state.params = {model::load_params(dir + "/model.bin")};
  cp.state.eta_u = io::base64_decode_doubles(j.at("eta_u").get<std::string>());
  cp.state.iteration = j.at("iteration").get<std::int64_t>();
  const nlohmann::json& adv = j.at("adversary");
  cp.state.adversary.kind = static_cast<criteria::AdversaryKind>(adv.at("kind").get<int>());
  cp.state.adversary.r = adv.at("r").get<double>();
  cp.state.adversary.tau_u_amp = io::base64_decode_doubles(adv.at("tau_u_amp").get<std::string>());
  cp.state.adversary.tau_u_phase = io::base64_decode_doubles(adv.at("tau_u_phase").get<std::string>());
  cp.state.adversary.lambda_u = io::base64_decode_doubles(adv.at("lambda_u").get<std::string>());

  std::ifstream opt_in(dir + "/opt.json");
  if (!opt_in) throw ConfigError("cannot open checkpoint " + dir + "/opt.json");
  std::string opt_text((std::istreambuf_iterator<char>(opt_in)), std::istreambuf_iterator<char>());
  cp.state.opt = opt::opt_state_from_json(opt_text);
  return cp;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  io::ensure_dir(cfg.output_dir);
  io::atomic_write_text(cfg.output_dir + "/config.resolved.json", config_to_json_text(cfg));

  meta::MetaTrainResult trained = meta::meta_train(cfg);

  std::string log_text;
  for (const std::string& line : trained.log.json_lines) {
    log_text += line;
    log_text += "\n";
  }
  io::atomic_write_text(cfg.output_dir + "/log.jsonl", log_text);
  save_checkpoint(trained.state, cfg, cfg.output_dir + "/checkpoint");

  const tasks::TaskRange er = tasks::eval_range(cfg.distribution);
  ExperimentResult result;
  result.config = cfg;
  for (int k : cfg.k_shots) {
    std::vector<double> stds;
    // eval episodes depend on (seed, k) only, so methods sharing a seed are
    // compared on identical tasks
    const std::uint64_t eval_seed = Rng::child(cfg.seed, 0xE000u + static_cast<std::uint64_t>(k)).next_u64();
    const meta::AdaptationCurve curve =
        evaluate_fast_adaptation(trained.state, er, k, cfg.eval_tasks, eval_seed, cfg.exec, &stds);
    for (int step = 1; step <= meta::kCurveSteps; ++step) {
      ResultRow row;
      row.criterion = criteria::to_string(cfg.criterion);
      row.optimizer = opt::to_string(cfg.optimizer);
      row.distribution = cfg.distribution == tasks::Distribution::identical ? "identical" : "skewed";
      row.k = k;
      row.step = step;
      row.mean_mse = curve.mse_by_step[static_cast<std::size_t>(step - 1)];
      row.std_mse = stds[static_cast<std::size_t>(step - 1)];
      row.n_tasks = curve.n_tasks;
      row.seed = cfg.seed;
      result.rows.push_back(row);
    }
  }
  io::atomic_write_text(cfg.output_dir + "/results.csv", results_to_csv(result.rows));
  result.state = std::move(trained.state);
  return result;
}

ExperimentResult run_experiment_file(const std::string& config_path) {
  return run_experiment(load_config(config_path));
}

std::vector<TrajectoryPoint> game_demo(opt::OptMode mode, double eta, int steps, double theta0, double alpha0) {
  if (steps < 1) throw ConfigError("game_demo: steps must be >= 1");
  if (mode == opt::OptMode::adam) throw ConfigError("game_demo needs a two-player optimizer (gda/sga/asga)");

  // R(theta, alpha) = theta * alpha: grad_theta = alpha, grad_alpha = theta,
  // both mixed second-derivative blocks are the identity.
  opt::GameFunction game;
  game.grads = [](std::span<const double> th, std::span<const double> al) {
    return opt::GameGrads{{al[0]}, {th[0]}};
  };
  game.hvps = [](std::span<const double>, std::span<const double>, const opt::GameGrads& g) {
    return opt::GameHvps{{g.maximizer[0]}, {g.minimizer[0]}};
  };

  opt::OptState state;
  state.mode = mode;
  state.eta = eta;
  state.eta_max = eta;
  state.init_moments(opt::PlayerSplit{1, 1});

  std::vector<double> theta{theta0};
  std::vector<double> alpha{alpha0};
  std::vector<TrajectoryPoint> traj;
  traj.push_back({0, theta[0], alpha[0], std::hypot(theta[0], alpha[0])});
  for (int s = 1; s <= steps; ++s) {
    opt::game_step(game, state, theta, alpha);
    traj.push_back({s, theta[0], alpha[0], std::hypot(theta[0], alpha[0])});
  }
  return traj;
}

std::string trajectory_to_csv(const std::vector<TrajectoryPoint>& traj) {
  std::string out = "step,theta,alpha,norm\r\n";
  for (const TrajectoryPoint& p : traj) {
    out += std::to_string(p.step) + "," + io::format_double(p.theta) + "," + io::format_double(p.alpha) + "," +
           io::format_double(p.norm) + "\r\n";
  }
  return out;
}

namespace {

struct CellStats {
  std::vector<double> values;  // final-step mean MSE, one per seed/file
  double mean() const {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
  }
  double stddev() const {
    const double m = mean();
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
  }
};

}  // namespace

CompareReport compare_report(const std::vector<std::string>& csv_paths) {
  if (csv_paths.size() < 2) throw ConfigError("compare_report needs at least two result files");

  std::vector<std::vector<ResultRow>> files;
  for (const std::string& p : csv_paths) files.push_back(results_from_csv_file(p));

  // every file must cover the same (k, step) grid
  auto grid_of = [](const std::vector<ResultRow>& rows) {
    std::set<std::pair<int, int>> g;
    for (const ResultRow& r : rows) g.insert({r.k, r.step});
    return g;
  };
  const std::set<std::pair<int, int>> ref = grid_of(files[0]);
  for (std::size_t i = 1; i < files.size(); ++i) {
    const std::set<std::pair<int, int>> g = grid_of(files[i]);
    if (g != ref) {
      std::string divergent;
      for (const auto& key : ref) {
        if (!g.count(key)) divergent += " -(k=" + std::to_string(key.first) + ",step=" + std::to_string(key.second) + ")";
      }
      for (const auto& key : g) {
        if (!ref.count(key)) divergent += " +(k=" + std::to_string(key.first) + ",step=" + std::to_string(key.second) + ")";
      }
      throw ConfigError("result grids differ between " + csv_paths[0] + " and " + csv_paths[i] + ":" + divergent);
    }
  }

  int final_step = 0;
  for (const auto& key : ref) final_step = std::max(final_step, key.second);

  // (distribution, k) -> method label -> stats across seeds/files
  std::map<std::pair<std::string, int>, std::map<std::string, CellStats>> cells;
  for (const std::vector<ResultRow>& rows : files) {
    for (const ResultRow& r : rows) {
      if (r.step != final_step) continue;
      cells[{r.distribution, r.k}][method_label(r.criterion, r.optimizer)].values.push_back(r.mean_mse);
    }
  }

  std::ostringstream text;
  std::string csv = "distribution,k,step,method_a,method_b,mean_a,std_a,seeds_a,mean_b,std_b,seeds_b,diff,winner\r\n";
  for (const auto& [cell, methods] : cells) {
    text << "distribution=" << cell.first << " k=" << cell.second << " (step " << final_step << ")\n";
    for (const auto& [label, stats] : methods) {
      text << "  " << label << ": mean_mse=" << io::format_double(stats.mean())
           << " std=" << io::format_double(stats.stddev()) << " seeds=" << stats.values.size() << "\n";
    }
    std::vector<std::string> labels;
    for (const auto& [label, stats] : methods) labels.push_back(label);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        const CellStats& a = methods.at(labels[i]);
        const CellStats& b = methods.at(labels[j]);
        const double diff = a.mean() - b.mean();
        std::string winner;
        if (a.mean() == b.mean()) {
          winner = "tie";
        } else {
          winner = a.mean() < b.mean() ? labels[i] : labels[j];
        }
        text << "  " << labels[i] << " vs " << labels[j] << ": diff=" << io::format_double(diff)
             << " winner=" << winner << "\n";
        csv += cell.first + "," + std::to_string(cell.second) + "," + std::to_string(final_step) + "," +
               labels[i] + "," + labels[j] + "," + io::format_double(a.mean()) + "," +
               io::format_double(a.stddev()) + "," + std::to_string(a.values.size()) + "," +
               io::format_double(b.mean()) + "," + io::format_double(b.stddev()) + "," +
               std::to_string(b.values.size()) + "," + io::format_double(diff) + "," + winner + "\r\n";
      }
    }
  }

  CompareReport rep;
  rep.text = text.str();
  rep.csv = csv;
  return rep;
}

}  // namespace rmeta::harness
