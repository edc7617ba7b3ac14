#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rmeta::opt {

enum class OptMode { adam, gda, sga, asga };

OptMode opt_mode_from_string(const std::string& s);
std::string to_string(OptMode m);

// Lengths of the two player blocks inside a concatenated vector; the
// maximizer block is updated by ascent.
struct PlayerSplit {
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::size_t total() const { return min_len + max_len; }
};

// Per-run optimizer state. First/second moments are laid out over the
// concatenation (minimizer block first) and stay zero-length for the
// moment-free modes until init_moments is called.
struct OptState {
  OptMode mode = OptMode::adam;
  double eta = 1e-3;      // minimizer step size
  double eta_max = 1e-3;  // maximizer step size (equal by default)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  void init_moments(const PlayerSplit& split);
};

// Gradients of the shared risk with respect to each player.
struct GameGrads {
  std::vector<double> minimizer;  // grad_theta R
  std::vector<double> maximizer;  // grad_alpha R
};

// Mixed second-derivative blocks applied to the opponent gradients:
//   cross_min = D2_{theta,alpha} R . grad_alpha R   (minimizer length)
//   cross_max = D2_{alpha,theta} R . grad_theta R   (maximizer length)
struct GameHvps {
  std::vector<double> cross_min;
  std::vector<double> cross_max;
};

// Evaluation interface a two-player objective exposes to the optimizers.
// Both callbacks evaluate at the point they are handed.
struct GameFunction {
  std::function<GameGrads(std::span<const double> th, std::span<const double> al)> grads;
  std::function<GameHvps(std::span<const double> th, std::span<const double> al, const GameGrads&)> hvps;
};

// Standard bias-corrected Adam on the minimizer block only (mode adam, no
// adversary). Updates params in place and advances the step counter.
void adam_step(OptState& state, std::span<const double> grad, std::span<double> params);

// Simultaneous descent/ascent, both gradients evaluated at the same point:
// theta' = theta - eta_min * g_min; alpha' = alpha + eta_max * g_max.
void gda_step(std::span<double> theta, std::span<double> alpha, std::span<const double> g_min,
              std::span<const double> g_max, double eta_min, double eta_max);

// Adjusted gradients:
//   g_theta = grad_theta R + eta_min * D2_{theta,alpha} R . grad_alpha R
//   g_alpha = grad_alpha R - eta_max * D2_{alpha,theta} R . grad_theta R
// Applying theta -= eta_min * g_theta, alpha += eta_max * g_alpha recovers the
// SGA update exactly. The adjustment coefficient is the same eta as the step
// size, per player.
GameGrads sga_adjust(const GameFunction& f, std::span<const double> theta, std::span<const double> alpha,
                     const GameGrads& g, double eta_min, double eta_max);

// One step of the chosen mode; theta/alpha are updated in place.
void game_step(const GameFunction& f, OptState& state, std::vector<double>& theta, std::vector<double>& alpha);

// ASGA: SGA-adjusted gradients fed through first/second moments with bias
// correction; descent on the minimizer block, ascent on the maximizer block.
void asga_step(const GameFunction& f, OptState& state, std::vector<double>& theta, std::vector<double>& alpha);

// Checkpointing: moments and step counter as a JSON-wrapped binary blob.
std::string opt_state_to_json(const OptState& state);
OptState opt_state_from_json(const std::string& text);

}  // namespace rmeta::opt
