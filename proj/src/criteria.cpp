#include "rmeta/criteria.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rmeta/errors.hpp"

namespace rmeta::criteria {

std::size_t AdversaryParams::flat_size() const {
  switch (kind) {
    case AdversaryKind::none:
      return 0;
    case AdversaryKind::minimax:
      return tau_u_amp.size() + tau_u_phase.size();
    case AdversaryKind::neyman_pearson:
      return lambda_u.size();
  }
  return 0;
}

void AdversaryParams::to_flat(std::vector<double>& out) const {
  out.clear();
  out.reserve(flat_size());
  if (kind == AdversaryKind::minimax) {
    out.insert(out.end(), tau_u_amp.begin(), tau_u_amp.end());
    out.insert(out.end(), tau_u_phase.begin(), tau_u_phase.end());
  } else if (kind == AdversaryKind::neyman_pearson) {
    out.insert(out.end(), lambda_u.begin(), lambda_u.end());
  }
}

void AdversaryParams::from_flat(std::span<const double> flat) {
  if (flat.size() != flat_size()) throw ShapeError("adversary flat vector has wrong length");
  if (kind == AdversaryKind::minimax) {
    std::copy_n(flat.begin(), tau_u_amp.size(), tau_u_amp.begin());
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(tau_u_amp.size()), tau_u_phase.size(),
                tau_u_phase.begin());
  } else if (kind == AdversaryKind::neyman_pearson) {
    std::copy_n(flat.begin(), lambda_u.size(), lambda_u.begin());
  }
}

std::vector<double> reparam_simplex(std::span<const double> tau_u) {
  if (tau_u.empty()) throw ShapeError("reparam_simplex: empty input");
  std::vector<double> p(tau_u.size());
  double mx = tau_u[0];
  for (double v : tau_u) mx = std::max(mx, v);
  double z = 0.0;
  for (std::size_t i = 0; i < tau_u.size(); ++i) {
    p[i] = std::exp(tau_u[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> reparam_nonneg(std::span<const double> lambda_u) {
  if (lambda_u.empty()) throw ShapeError("reparam_nonneg: empty input");
  std::vector<double> out(lambda_u.size());
  for (std::size_t i = 0; i < lambda_u.size(); ++i) out[i] = ad::softplus_scalar(lambda_u[i]);
  return out;
}

double bayes_risk(std::span<const double> losses, std::span<const double> prior) {
  if (losses.size() != prior.size()) throw ShapeError("bayes_risk: losses and prior lengths differ");
  if (losses.empty()) throw ShapeError("bayes_risk: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) acc += losses[i] * prior[i];
  return acc;
}

double minimax_risk(std::span<const double> losses, std::span<const double> tau_u) {
  if (losses.size() != tau_u.size()) throw ShapeError("minimax_risk: losses and logits lengths differ");
  const std::vector<double> tau = reparam_simplex(tau_u);
  double acc = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) acc += losses[i] * tau[i];
  return acc;
}

double np_risk(std::span<const double> losses, std::span<const double> lambda_u, double r) {
  if (losses.size() != lambda_u.size()) throw ShapeError("np_risk: losses and multipliers lengths differ");
  if (losses.empty()) throw ShapeError("np_risk: empty batch");
  if (r < 0.0) throw ConfigError("np_risk: threshold must be >= 0");
  const double unif = 1.0 / static_cast<double>(losses.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double lam = ad::softplus_scalar(lambda_u[i]);
    acc += (unif + lam) * losses[i] - lam * r;
  }
  return acc;
}

ad::Var bayes_risk_node(ad::Var losses, std::span<const double> prior) {
  ad::Tape& tape = *losses.tape;
  if (tape.value(losses).size() != prior.size()) {
    throw ShapeError("bayes_risk: losses and prior lengths differ");
  }
  ad::Var p = tape.constant(ad::Tensor::column({prior.begin(), prior.end()}));
  return sum(losses * p);
}

ad::Var minimax_risk_node(ad::Var losses, ad::Var tau_u) {
  if (losses.tape->value(losses).size() != tau_u.tape->value(tau_u).size()) {
    throw ShapeError("minimax_risk: losses and logits lengths differ");
  }
  return sum(losses * softmax(tau_u));
}

ad::Var np_risk_node(ad::Var losses, ad::Var lambda_u, double r) {
  ad::Tape& tape = *losses.tape;
  const std::size_t n = tape.value(losses).size();
  if (n != tape.value(lambda_u).size()) {
    throw ShapeError("np_risk: losses and multipliers lengths differ");
  }
  if (r < 0.0) throw ConfigError("np_risk: threshold must be >= 0");
  ad::Var lam = softplus(lambda_u);
  ad::Var unif = tape.constant_scalar(1.0 / static_cast<double>(n));
  ad::Var weighted = sum((unif + lam) * losses);
  ad::Var penalty = tape.constant_scalar(r) * sum(lam);
  return weighted - penalty;
}

std::string RiskReport::to_json() const {
  nlohmann::json j;
  j["aggregate"] = aggregate;
  j["task_ids"] = task_ids;
  j["losses"] = per_task_losses;
  j["constrained_values"] = constrained_values;
  return j.dump();
}

}  // namespace rmeta::criteria
