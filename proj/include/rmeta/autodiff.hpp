#pragma once

#include <functional>
#include <span>

#include "rmeta/param_vector.hpp"
#include "rmeta/tape.hpp"

namespace rmeta::ad {

// A parameter vector bound onto a tape: one leaf node per segment, shaped
// according to the segment spec.
struct BoundParams {
  LayoutPtr layout;
  std::vector<Var> segments;
};

BoundParams bind(Tape& tape, const ParamVector& p);

// Collects the adjoints of a bound parameter's segments into a flat gradient.
// Only meaningful after Tape::backward.
Gradient collect_gradient(const Tape& tape, const BoundParams& bound);

// The two players of the games this library optimizes: the model parameters
// are minimized, the adversarial parameters (task distribution or Lagrange
// multipliers) are maximized.
enum class Player { minimizer, maximizer };

// A scalar function of both players, built fresh on a tape per call.
using ScalarFn = std::function<Var(Tape&, const BoundParams& min_params, const BoundParams& max_params)>;

// Primal value of f at (min_p, max_p).
double evaluate(const ScalarFn& f, const ParamVector& min_p, const ParamVector& max_p, Tape* scratch = nullptr);

// d f / d (selected player), the other player held constant.
Gradient gradient(const ScalarFn& f, Player wrt, const ParamVector& min_p, const ParamVector& max_p,
                  Tape* scratch = nullptr, double* value_out = nullptr);

// Mixed second-derivative block applied to a direction, realized as a
// central finite difference of gradients:
//
//   grad_wrt = minimizer:  (d/dh) grad_min f(min_p, max_p + h*dir) at h=0
//   grad_wrt = maximizer:  (d/dh) grad_max f(min_p + h*dir, max_p) at h=0
//
// dir must carry the layout of the perturbed (opposite) player; the result
// carries the layout of the differentiated player. A zero direction yields a
// zero vector. Step size: sqrt(machine eps) * (1 + max|perturbed|) / max|dir|.
Gradient mixed_hvp(const ScalarFn& f, const ParamVector& min_p, const ParamVector& max_p,
                   const Gradient& dir, Player grad_wrt, Tape* scratch = nullptr);

}  // namespace rmeta::ad
