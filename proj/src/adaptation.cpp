#include "rmeta/adaptation.hpp"

#include <cmath>
#include <limits>

#include "rmeta/errors.hpp"

namespace rmeta::meta {

namespace {

// One gradient step on the support MSE, in place.
void support_step(model::ModelParams& phi, const model::MlpConfig& cfg, std::span<const double> eta_layers,
                  const tasks::Episode& ep, ad::Tape& tape, std::vector<double>* grad_sum) {
  tape.reset();
  ad::BoundParams bound = ad::bind(tape, phi.params);
  ad::Var pred = model::mlp_forward(tape, cfg, bound, ep.support_x);
  ad::Var loss = model::mse_loss(pred, ep.support_y);
  tape.backward(loss);

  const ad::Layout& lay = *phi.params.layout;
  for (std::size_t s = 0; s < lay.segment_count(); ++s) {
    const double eta = eta_layers[static_cast<std::size_t>(lay.segment(s).layer)];
    const ad::Tensor& adj = tape.adjoint(bound.segments[s]);
    std::span<double> dst = phi.params.segment_span(s);
    double* acc = grad_sum ? grad_sum->data() + lay.offset(s) : nullptr;
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double g = adj.data[j];
      if (acc) acc[j] += g;
      dst[j] -= eta * g;
    }
  }
}

}  // namespace

model::ModelParams inner_adapt(const model::ModelParams& theta, const model::MlpConfig& cfg,
                               std::span<const double> eta_layers, const tasks::Episode& episode,
                               int steps, ad::Tape& tape, std::vector<double>* support_grad_sum) {
  if (steps < 1) throw ConfigError("inner_adapt: steps must be >= 1 (zero-shot skips adaptation)");
  if (episode.support_x.empty()) throw ConfigError("inner_adapt: empty support set");
  if (eta_layers.size() != static_cast<std::size_t>(theta.params.layout->layer_count())) {
    throw ShapeError("inner_adapt: one learning rate per layer required");
  }
  if (support_grad_sum) support_grad_sum->assign(theta.params.size(), 0.0);

  model::ModelParams phi = theta;
  for (int s = 0; s < steps; ++s) {
    support_step(phi, cfg, eta_layers, episode, tape, support_grad_sum);
  }
  return phi;
}

void eval_episode(const model::ModelParams& theta, const model::MlpConfig& cfg,
                  std::span<const double> eta_layers, const tasks::Episode& episode, int inner_steps,
                  bool want_grads, ad::Tape& tape, EpisodeOutputs& out) {
  model::ModelParams phi =
      inner_adapt(theta, cfg, eta_layers, episode, inner_steps, tape, want_grads ? &out.support_grad_sum : nullptr);

  if (!want_grads) {
    out.query_loss = model::mse(model::predict(phi, cfg, episode.query_x), episode.query_y);
    out.query_grad.clear();
    out.support_grad_sum.clear();
    return;
  }

  tape.reset();
  ad::BoundParams bound = ad::bind(tape, phi.params);
  ad::Var pred = model::mlp_forward(tape, cfg, bound, episode.query_x);
  ad::Var loss = model::mse_loss(pred, episode.query_y);
  tape.backward(loss);
  out.query_loss = tape.value(loss).data[0];

  const ad::Layout& lay = *phi.params.layout;
  out.query_grad.resize(phi.params.size());
  for (std::size_t s = 0; s < lay.segment_count(); ++s) {
    const ad::Tensor& adj = tape.adjoint(bound.segments[s]);
    double* dst = out.query_grad.data() + lay.offset(s);
    for (std::size_t j = 0; j < adj.size(); ++j) dst[j] = adj.data[j];
  }
}

std::vector<double> adaptation_curve(const model::ModelParams& theta, const model::MlpConfig& cfg,
                                     std::span<const double> eta_layers, const tasks::Episode& episode,
                                     int max_steps, ad::Tape& tape) {
  if (max_steps < 1) throw ConfigError("adaptation_curve: max_steps must be >= 1");
  std::vector<double> curve(static_cast<std::size_t>(max_steps));

  if (episode.support_x.empty()) {
    const double unadapted = model::mse(model::predict(theta, cfg, episode.query_x), episode.query_y);
    for (double& v : curve) v = unadapted;
    return curve;
  }

  model::ModelParams phi = theta;
  for (int s = 0; s < max_steps; ++s) {
    // a diverging adaptation trajectory scores +inf from the first bad step
    // onward instead of aborting the whole evaluation sweep
    double mse = std::numeric_limits<double>::infinity();
    try {
      support_step(phi, cfg, eta_layers, episode, tape, nullptr);
      mse = model::mse(model::predict(phi, cfg, episode.query_x), episode.query_y);
    } catch (const NonFiniteError&) {
    }
    if (!std::isfinite(mse)) {
      for (int rest = s; rest < max_steps; ++rest) {
        curve[static_cast<std::size_t>(rest)] = std::numeric_limits<double>::infinity();
      }
      break;
    }
    curve[static_cast<std::size_t>(s)] = mse;
  }
  return curve;
}

}  // namespace rmeta::meta
