#include "rmeta/autodiff.hpp"

#include <cmath>
#include <limits>

#include "rmeta/errors.hpp"

namespace rmeta::ad {

BoundParams bind(Tape& tape, const ParamVector& p) {
  BoundParams out;
  out.layout = p.layout;
  if (!p.layout) return out;
  out.segments.reserve(p.layout->segment_count());
  for (std::size_t i = 0; i < p.layout->segment_count(); ++i) {
    const SegmentSpec& s = p.layout->segment(i);
    Tensor t(s.rows, s.cols);
    const std::span<const double> src = p.segment_span(i);
    for (std::size_t j = 0; j < src.size(); ++j) t.data[j] = src[j];
    out.segments.push_back(tape.leaf(t, s.name));
  }
  return out;
}

Gradient collect_gradient(const Tape& tape, const BoundParams& bound) {
  Gradient g(bound.layout);
  for (std::size_t i = 0; i < bound.segments.size(); ++i) {
    const Tensor& adj = tape.adjoint(bound.segments[i]);
    const std::span<double> dst = g.segment_span(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = adj.data[j];
  }
  return g;
}

namespace {

Var build(const ScalarFn& f, Tape& tape, const ParamVector& min_p, const ParamVector& max_p,
          BoundParams* min_out, BoundParams* max_out) {
  tape.reset();
  BoundParams bmin = bind(tape, min_p);
  BoundParams bmax = bind(tape, max_p);
  Var out = f(tape, bmin, bmax);
  if (min_out) *min_out = std::move(bmin);
  if (max_out) *max_out = std::move(bmax);
  return out;
}

}  // namespace

double evaluate(const ScalarFn& f, const ParamVector& min_p, const ParamVector& max_p, Tape* scratch) {
  Tape local;
  Tape& tape = scratch ? *scratch : local;
  Var out = build(f, tape, min_p, max_p, nullptr, nullptr);
  if (!tape.value(out).is_scalar()) {
    throw ShapeError("risk expression did not produce a scalar");
  }
  return tape.value(out).data[0];
}

Gradient gradient(const ScalarFn& f, Player wrt, const ParamVector& min_p, const ParamVector& max_p,
                  Tape* scratch, double* value_out) {
  Tape local;
  Tape& tape = scratch ? *scratch : local;
  BoundParams bmin, bmax;
  Var out = build(f, tape, min_p, max_p, &bmin, &bmax);
  tape.backward(out);
  if (value_out) *value_out = tape.value(out).data[0];
  return collect_gradient(tape, wrt == Player::minimizer ? bmin : bmax);
}

Gradient mixed_hvp(const ScalarFn& f, const ParamVector& min_p, const ParamVector& max_p,
                   const Gradient& dir, Player grad_wrt, Tape* scratch) {
  const ParamVector& perturbed = grad_wrt == Player::minimizer ? max_p : min_p;
  const LayoutPtr out_layout = grad_wrt == Player::minimizer ? min_p.layout : max_p.layout;
  if (dir.layout && perturbed.layout && !(*dir.layout == *perturbed.layout)) {
    throw ShapeError("mixed_hvp: direction layout does not match the perturbed player");
  }

  const double dir_inf = max_abs(dir.values);
  if (dir_inf == 0.0) return Gradient(out_layout);

  const double tiny = std::numeric_limits<double>::min();
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + max_abs(perturbed.values)) /
                     std::max(dir_inf, tiny);

  ParamVector plus = perturbed;
  ParamVector minus = perturbed;
  for (std::size_t i = 0; i < plus.values.size(); ++i) {
    plus.values[i] += eps * dir.values[i];
    minus.values[i] -= eps * dir.values[i];
  }

  Gradient gp, gm;
  if (grad_wrt == Player::minimizer) {
    gp = gradient(f, Player::minimizer, min_p, plus, scratch);
    gm = gradient(f, Player::minimizer, min_p, minus, scratch);
  } else {
    gp = gradient(f, Player::maximizer, plus, max_p, scratch);
    gm = gradient(f, Player::maximizer, minus, max_p, scratch);
  }

  Gradient out(out_layout);
  const double inv = 1.0 / (2.0 * eps);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (gp.values[i] - gm.values[i]) * inv;
    if (!std::isfinite(out.values[i])) {
      throw NonFiniteError("mixed_hvp produced a non-finite entry", static_cast<long long>(i));
    }
  }
  return out;
}

}  // namespace rmeta::ad
