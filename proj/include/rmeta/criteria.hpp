#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmeta/tape.hpp"

namespace rmeta::criteria {

enum class AdversaryKind { none, minimax, neyman_pearson };

// Unconstrained adversarial parameters. The feasible values are recovered by
// reparametrization: tau = softmax(tau_u) per factor, lambda = softplus(lambda_u).
struct AdversaryParams {
  AdversaryKind kind = AdversaryKind::none;
  std::vector<double> tau_u_amp;    // minimax: amplitude factor logits
  std::vector<double> tau_u_phase;  // minimax: phase factor logits
  std::vector<double> lambda_u;     // neyman-pearson: one per constrained task/atom
  double r = 0.1;                   // neyman-pearson risk threshold

  std::size_t flat_size() const;
  // View the adversary as one flat vector (tau factors concatenated, or lambda_u).
  void to_flat(std::vector<double>& out) const;
  void from_flat(std::span<const double> flat);
};

// Probability vector from unconstrained logits: positive entries, sums to 1,
// invariant to adding a constant to the input.
std::vector<double> reparam_simplex(std::span<const double> tau_u);

// Nonnegative multipliers ln(1 + e^x), overflow-safe.
std::vector<double> reparam_nonneg(std::span<const double> lambda_u);

// Expected risk under an explicit prior.
double bayes_risk(std::span<const double> losses, std::span<const double> prior);

// Soft worst-case risk: softmax(tau_u) . losses. Minimized in the model,
// maximized in tau_u.
double minimax_risk(std::span<const double> losses, std::span<const double> tau_u);

// Risk-constrained Lagrangian: sum_i (1/n + softplus(lambda_u_i)) * L_i
//                              - softplus(lambda_u_i) * r.
double np_risk(std::span<const double> losses, std::span<const double> lambda_u, double r);

// Tape versions; `losses` and the adversary enter as nodes so the result is
// differentiable in both.
ad::Var bayes_risk_node(ad::Var losses, std::span<const double> prior);
ad::Var minimax_risk_node(ad::Var losses, ad::Var tau_u);
ad::Var np_risk_node(ad::Var losses, ad::Var lambda_u, double r);

// Per-iteration snapshot of the criterion evaluation. `aggregate` always
// reproduces the criterion formula applied to per_task_losses.
struct RiskReport {
  std::vector<std::string> task_ids;
  std::vector<double> per_task_losses;
  double aggregate = 0.0;
  std::vector<double> constrained_values;  // tau or lambda at the batch tasks

  std::string to_json() const;
};

}  // namespace rmeta::criteria
