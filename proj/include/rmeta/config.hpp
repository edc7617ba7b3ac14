#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmeta/criteria.hpp"
#include "rmeta/model.hpp"
#include "rmeta/optimizers.hpp"
#include "rmeta/tasks.hpp"

namespace rmeta::criteria {

enum class Criterion { bayes, minimax, neyman_pearson };

Criterion criterion_from_string(const std::string& s);
std::string to_string(Criterion c);
AdversaryKind adversary_kind_for(Criterion c);

}  // namespace rmeta::criteria

namespace rmeta::meta {

enum class ExecMode { serial, parallel };

ExecMode exec_mode_from_string(const std::string& s);
std::string to_string(ExecMode m);

}  // namespace rmeta::meta

namespace rmeta::harness {

// One experiment = one (criterion, optimizer, distribution) cell of the
// benchmark, trained and then swept over k-shot fast adaptation.
struct ExperimentConfig {
  criteria::Criterion criterion = criteria::Criterion::bayes;
  opt::OptMode optimizer = opt::OptMode::adam;
  tasks::Distribution distribution = tasks::Distribution::identical;
  std::vector<int> k_shots = {5, 10, 20};
  std::int64_t iterations = 10000;
  int tasks_per_iter = 25;
  std::uint64_t seed = 1;
  double r = 0.1;
  model::MlpConfig model;
  std::string output_dir = "out";

  // training details
  int train_shots = 10;
  int query_size = 100;
  int inner_steps = 4;
  int eval_tasks = 100;
  double eta = 1e-3;
  double eta_adversary = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double inner_lr_init = 0.01;
  double init_scale = 1.0;
  meta::ExecMode exec = meta::ExecMode::parallel;
  bool log_preadapt = false;
  // minimax task proposal: false = uniform atoms with importance weights
  // (all tau dependence through the differentiable weights), true = draw
  // atoms from the current adversarial distribution itself
  bool adversarial_sampling = false;

  // Bayes pairs only with adam; the game criteria pair with gda/sga/asga.
  void validate() const;
};

// JSON round trip. Parsing fills unspecified fields with the defaults above;
// serialization always emits every field (the resolved config).
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

// Reads a config file and applies the ROBUSTMETA_SEED override if set.
ExperimentConfig load_config(const std::string& path);

}  // namespace rmeta::harness
