#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmeta/config.hpp"
#include "rmeta/criteria.hpp"
#include "rmeta/episode_kernels.hpp"
#include "rmeta/optimizers.hpp"

namespace rmeta::meta {

// Fast-adaptation evaluation sweeps 1..kCurveSteps inner updates.
inline constexpr int kCurveSteps = 10;

struct MetaState {
  model::MlpConfig cfg;
  model::ModelParams params;
  std::vector<double> eta_u;  // unconstrained per-layer inner learning rates
  criteria::AdversaryParams adversary;
  opt::OptState opt;
  std::int64_t iteration = 0;

  // softplus(eta_u): the positive rates the inner loop actually uses
  std::vector<double> eta_layers() const;
};

MetaState init_meta_state(const harness::ExperimentConfig& cfg);

// The tasks one outer iteration trains on, plus the atom indices / buckets
// that route adversary gradients. Deterministic in (cfg.seed, iter) and, for
// minimax, the current adversary logits.
struct TrainingBatch {
  std::vector<tasks::Episode> episodes;
  std::vector<int> amp_idx, phase_idx;  // minimax draws
  std::vector<std::size_t> buckets;     // neyman-pearson buckets
};

TrainingBatch training_batch(const harness::ExperimentConfig& cfg, const criteria::AdversaryParams& adversary,
                             std::int64_t iter);

struct TrainLog {
  std::vector<double> risk_by_iter;
  std::vector<double> preadapt_by_iter;  // filled only when log_preadapt is on
  std::vector<std::string> json_lines;   // one JSON object per outer iteration
};

struct MetaTrainResult {
  MetaState state;
  TrainLog log;
};

// Runs the outer loop: sample tasks (uniform or adversarial), adapt per
// episode, aggregate query losses under the configured criterion, and step
// the configured optimizer. First-order: inner-loop gradients are treated as
// constants when differentiating through the adapted parameters.
// Deterministic in cfg.seed.
MetaTrainResult meta_train(const harness::ExperimentConfig& cfg);

struct AdaptationCurve {
  std::vector<double> mse_by_step;  // exactly kCurveSteps entries
  int k = 0;
  int n_tasks = 0;
};

// Mean query MSE after 1..kCurveSteps inner updates over n_tasks fresh tasks
// from eval_range, using the meta-learned per-layer rates. k = 0 yields a
// flat curve of the unadapted MSE.
AdaptationCurve evaluate_fast_adaptation(const MetaState& state, const tasks::TaskRange& eval_range, int k,
                                         int n_tasks, std::uint64_t seed, ExecMode mode,
                                         std::vector<double>* std_by_step = nullptr);

}  // namespace rmeta::meta
