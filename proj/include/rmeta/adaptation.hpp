#pragma once

#include <span>
#include <vector>

#include "rmeta/model.hpp"
#include "rmeta/tasks.hpp"

namespace rmeta::meta {

// Inner-loop adaptation: `steps` gradient-descent updates on the support-set
// MSE, each layer scaled by its own learning rate. Returns fresh parameters;
// theta itself is never mutated. When support_grad_sum is given it receives
// the sum over steps of the support gradients (used for the first-order
// learning-rate meta-gradient).
model::ModelParams inner_adapt(const model::ModelParams& theta, const model::MlpConfig& cfg,
                               std::span<const double> eta_layers, const tasks::Episode& episode,
                               int steps, ad::Tape& tape,
                               std::vector<double>* support_grad_sum = nullptr);

// Everything one outer iteration needs from a single episode.
struct EpisodeOutputs {
  double query_loss = 0.0;
  std::vector<double> query_grad;        // dL/dphi at the adapted parameters
  std::vector<double> support_grad_sum;  // inner-step gradient sum
};

// Adapt, then measure (and optionally differentiate) the query MSE at the
// adapted parameters. Pure in its inputs; the tape is scratch space.
void eval_episode(const model::ModelParams& theta, const model::MlpConfig& cfg,
                  std::span<const double> eta_layers, const tasks::Episode& episode, int inner_steps,
                  bool want_grads, ad::Tape& tape, EpisodeOutputs& out);

// Query MSE after each of 1..max_steps inner updates. An empty support set
// (zero-shot) yields the unadapted MSE repeated max_steps times.
std::vector<double> adaptation_curve(const model::ModelParams& theta, const model::MlpConfig& cfg,
                                     std::span<const double> eta_layers, const tasks::Episode& episode,
                                     int max_steps, ad::Tape& tape);

}  // namespace rmeta::meta
