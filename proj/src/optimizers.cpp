#include "rmeta/optimizers.hpp"

#include <cmath>

#include <json.hpp>

#include "rmeta/errors.hpp"
#include "rmeta/io_util.hpp"

namespace rmeta::opt {

OptMode opt_mode_from_string(const std::string& s) {
  if (s == "adam") return OptMode::adam;
  if (s == "gda") return OptMode::gda;
  if (s == "sga") return OptMode::sga;
  if (s == "asga") return OptMode::asga;
  throw ConfigError("unknown optimizer '" + s + "'");
}

std::string to_string(OptMode m) {
  switch (m) {
    case OptMode::adam: return "adam";
    case OptMode::gda: return "gda";
    case OptMode::sga: return "sga";
    case OptMode::asga: return "asga";
  }
  return "?";
}

void OptState::init_moments(const PlayerSplit& split) {
  m.assign(split.total(), 0.0);
  v.assign(split.total(), 0.0);
  t = 0;
}

void adam_step(OptState& state, std::span<const double> grad, std::span<double> params) {
  if (state.mode != OptMode::adam) throw ConfigError("adam_step called with a non-adam state");
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: gradient/parameter/moment lengths differ");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.eta * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

void gda_step(std::span<double> theta, std::span<double> alpha, std::span<const double> g_min,
              std::span<const double> g_max, double eta_min, double eta_max) {
  if (theta.size() != g_min.size() || alpha.size() != g_max.size()) {
    throw ShapeError("gda_step: gradient lengths do not match the parameters");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta_min * g_min[i];
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += eta_max * g_max[i];
}

GameGrads sga_adjust(const GameFunction& f, std::span<const double> theta, std::span<const double> alpha,
                     const GameGrads& g, double eta_min, double eta_max) {
  const GameHvps h = f.hvps(theta, alpha, g);
  if (h.cross_min.size() != g.minimizer.size() || h.cross_max.size() != g.maximizer.size()) {
    throw ShapeError("sga_adjust: hvp lengths do not match the gradients");
  }
  GameGrads out;
  out.minimizer.resize(g.minimizer.size());
  out.maximizer.resize(g.maximizer.size());
  for (std::size_t i = 0; i < out.minimizer.size(); ++i) {
    out.minimizer[i] = g.minimizer[i] + eta_min * h.cross_min[i];
  }
  for (std::size_t i = 0; i < out.maximizer.size(); ++i) {
    out.maximizer[i] = g.maximizer[i] - eta_max * h.cross_max[i];
  }
  return out;
}

namespace {

void check_finite(const GameGrads& g, std::int64_t step) {
  for (double x : g.minimizer) {
    if (!std::isfinite(x)) {
      throw NonFiniteError("non-finite minimizer gradient at step " + std::to_string(step), step);
    }
  }
  for (double x : g.maximizer) {
    if (!std::isfinite(x)) {
      throw NonFiniteError("non-finite maximizer gradient at step " + std::to_string(step), step);
    }
  }
}

}  // namespace

void asga_step(const GameFunction& f, OptState& state, std::vector<double>& theta, std::vector<double>& alpha) {
  const std::size_t n_min = theta.size();
  const std::size_t n_max = alpha.size();
  if (state.m.size() != n_min + n_max || state.v.size() != n_min + n_max) {
    throw ShapeError("asga_step: moment lengths do not match the players");
  }
  state.t += 1;
  const GameGrads raw = f.grads(theta, alpha);
  const GameGrads adj = sga_adjust(f, theta, alpha, raw, state.eta, state.eta_max);
  check_finite(adj, state.t);

  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n_min + n_max; ++i) {
    const double g = i < n_min ? adj.minimizer[i] : adj.maximizer[i - n_min];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    const double step = mhat / (std::sqrt(vhat) + state.epsilon);
    if (i < n_min) {
      theta[i] -= state.eta * step;
    } else {
      alpha[i - n_min] += state.eta_max * step;
    }
  }
}

void game_step(const GameFunction& f, OptState& state, std::vector<double>& theta, std::vector<double>& alpha) {
  switch (state.mode) {
    case OptMode::adam:
      throw ConfigError("game_step: adam is single-player; use adam_step");
    case OptMode::gda: {
      state.t += 1;
      const GameGrads g = f.grads(theta, alpha);
      check_finite(g, state.t);
      gda_step(theta, alpha, g.minimizer, g.maximizer, state.eta, state.eta_max);
      break;
    }
    case OptMode::sga: {
      state.t += 1;
      const GameGrads raw = f.grads(theta, alpha);
      const GameGrads adj = sga_adjust(f, theta, alpha, raw, state.eta, state.eta_max);
      check_finite(adj, state.t);
      gda_step(theta, alpha, adj.minimizer, adj.maximizer, state.eta, state.eta_max);
      break;
    }
    case OptMode::asga:
      asga_step(f, state, theta, alpha);
      break;
  }
}

std::string opt_state_to_json(const OptState& state) {
  nlohmann::json j;
  j["mode"] = to_string(state.mode);
  j["eta"] = state.eta;
  j["eta_max"] = state.eta_max;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["epsilon"] = state.epsilon;
  j["t"] = state.t;
  j["m"] = io::base64_encode(state.m);
  j["v"] = io::base64_encode(state.v);
  return j.dump();
}

OptState opt_state_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  OptState s;
  s.mode = opt_mode_from_string(j.at("mode").get<std::string>());
  s.eta = j.at("eta").get<double>();
  s.eta_max = j.at("eta_max").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.t = j.at("t").get<std::int64_t>();
  s.m = io::base64_decode_doubles(j.at("m").get<std::string>());
  s.v = io::base64_decode_doubles(j.at("v").get<std::string>());
  return s;
}

}  // namespace rmeta::opt
