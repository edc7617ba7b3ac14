#include "rmeta/config.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "rmeta/errors.hpp"

namespace rmeta::criteria {

Criterion criterion_from_string(const std::string& s) {
  if (s == "bayes") return Criterion::bayes;
  if (s == "minimax") return Criterion::minimax;
  if (s == "neyman_pearson") return Criterion::neyman_pearson;
  throw ConfigError("unknown criterion '" + s + "'");
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::bayes: return "bayes";
    case Criterion::minimax: return "minimax";
    case Criterion::neyman_pearson: return "neyman_pearson";
  }
  return "?";
}

AdversaryKind adversary_kind_for(Criterion c) {
  switch (c) {
    case Criterion::bayes: return AdversaryKind::none;
    case Criterion::minimax: return AdversaryKind::minimax;
    case Criterion::neyman_pearson: return AdversaryKind::neyman_pearson;
  }
  return AdversaryKind::none;
}

}  // namespace rmeta::criteria

namespace rmeta::meta {

ExecMode exec_mode_from_string(const std::string& s) {
  if (s == "serial") return ExecMode::serial;
  if (s == "parallel") return ExecMode::parallel;
  throw ConfigError("unknown exec mode '" + s + "'");
}

std::string to_string(ExecMode m) { return m == ExecMode::serial ? "serial" : "parallel"; }

}  // namespace rmeta::meta

namespace rmeta::harness {

void ExperimentConfig::validate() const {
  model.validate();
  const bool bayes = criterion == criteria::Criterion::bayes;
  const bool adam = optimizer == opt::OptMode::adam;
  if (bayes != adam) {
    throw ConfigError("invalid pairing: criterion '" + criteria::to_string(criterion) + "' with optimizer '" +
                      opt::to_string(optimizer) + "' (bayes pairs with adam; minimax/neyman_pearson with gda/sga/asga)");
  }
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (tasks_per_iter < 1) throw ConfigError("tasks_per_iter must be >= 1");
  if (train_shots < 1) throw ConfigError("train_shots must be >= 1");
  if (query_size < 1) throw ConfigError("query_size must be >= 1");
  if (inner_steps < 1) throw ConfigError("inner_steps must be >= 1");
  if (eval_tasks < 1) throw ConfigError("eval_tasks must be >= 1");
  if (r < 0.0) throw ConfigError("threshold r must be >= 0");
  if (k_shots.empty()) throw ConfigError("k_shots must be nonempty");
  for (int k : k_shots) {
    if (k < 0) throw ConfigError("k_shots entries must be >= 0");
  }
  if (!(eta > 0.0) || !(eta_adversary > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(inner_lr_init > 0.0)) throw ConfigError("inner_lr_init must be > 0");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be > 0");
}

namespace {

std::string activation_name(model::Activation a) {
  return a == model::Activation::relu ? "relu" : "tanh";
}

model::Activation activation_from(const std::string& s) {
  if (s == "relu") return model::Activation::relu;
  if (s == "tanh") return model::Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig c;
  if (j.contains("criterion")) c.criterion = criteria::criterion_from_string(j["criterion"].get<std::string>());
  if (j.contains("optimizer")) c.optimizer = opt::opt_mode_from_string(j["optimizer"].get<std::string>());
  if (j.contains("distribution")) {
    const std::string d = j["distribution"].get<std::string>();
    if (d == "identical") {
      c.distribution = tasks::Distribution::identical;
    } else if (d == "skewed") {
      c.distribution = tasks::Distribution::skewed;
    } else {
      throw ConfigError("unknown distribution '" + d + "'");
    }
  }
  if (j.contains("k_shots")) c.k_shots = j["k_shots"].get<std::vector<int>>();
  if (j.contains("iterations")) c.iterations = j["iterations"].get<std::int64_t>();
  if (j.contains("tasks_per_iter")) c.tasks_per_iter = j["tasks_per_iter"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("r")) c.r = j["r"].get<double>();
  if (j.contains("model")) {
    const nlohmann::json& m = j["model"];
    if (m.contains("input_dim")) c.model.input_dim = m["input_dim"].get<int>();
    if (m.contains("hidden_dims")) c.model.hidden_dims = m["hidden_dims"].get<std::vector<int>>();
    if (m.contains("output_dim")) c.model.output_dim = m["output_dim"].get<int>();
    if (m.contains("activation")) c.model.activation = activation_from(m["activation"].get<std::string>());
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("train_shots")) c.train_shots = j["train_shots"].get<int>();
  if (j.contains("query_size")) c.query_size = j["query_size"].get<int>();
  if (j.contains("inner_steps")) c.inner_steps = j["inner_steps"].get<int>();
  if (j.contains("eval_tasks")) c.eval_tasks = j["eval_tasks"].get<int>();
  if (j.contains("eta")) c.eta = j["eta"].get<double>();
  if (j.contains("eta_adversary")) c.eta_adversary = j["eta_adversary"].get<double>();
  if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
  if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
  if (j.contains("inner_lr_init")) c.inner_lr_init = j["inner_lr_init"].get<double>();
  if (j.contains("init_scale")) c.init_scale = j["init_scale"].get<double>();
  if (j.contains("exec")) c.exec = meta::exec_mode_from_string(j["exec"].get<std::string>());
  if (j.contains("log_preadapt")) c.log_preadapt = j["log_preadapt"].get<bool>();
  if (j.contains("adversarial_sampling")) c.adversarial_sampling = j["adversarial_sampling"].get<bool>();
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
  nlohmann::json j;
  j["criterion"] = criteria::to_string(c.criterion);
  j["optimizer"] = opt::to_string(c.optimizer);
  j["distribution"] = c.distribution == tasks::Distribution::identical ? "identical" : "skewed";
  j["k_shots"] = c.k_shots;
  j["iterations"] = c.iterations;
  j["tasks_per_iter"] = c.tasks_per_iter;
  j["seed"] = c.seed;
  j["r"] = c.r;
  j["model"] = {{"input_dim", c.model.input_dim},
                {"hidden_dims", c.model.hidden_dims},
                {"output_dim", c.model.output_dim},
                {"activation", activation_name(c.model.activation)}};
  j["output_dir"] = c.output_dir;
  j["train_shots"] = c.train_shots;
  j["query_size"] = c.query_size;
  j["inner_steps"] = c.inner_steps;
  j["eval_tasks"] = c.eval_tasks;
  j["eta"] = c.eta;
  j["eta_adversary"] = c.eta_adversary;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["inner_lr_init"] = c.inner_lr_init;
  j["init_scale"] = c.init_scale;
  j["exec"] = meta::to_string(c.exec);
  j["log_preadapt"] = c.log_preadapt;
  j["adversarial_sampling"] = c.adversarial_sampling;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig cfg = config_from_json_text(text);
  if (const char* env = std::getenv("ROBUSTMETA_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
  return cfg;
}

}  // namespace rmeta::harness
