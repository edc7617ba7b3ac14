#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmeta/rng.hpp"

namespace rmeta::tasks {

// Global parameter ranges of the sinusoid family y = a * sin(x - p).
inline constexpr double kAmpMin = 0.1;
inline constexpr double kAmpMax = 5.0;
inline constexpr double kPhaseMin = 0.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInputMin = -5.0;
inline constexpr double kInputMax = 5.0;
inline constexpr int kAtomsPerAxis = 1000;

struct TaskSpec {
  double amplitude = 1.0;
  double phase = 0.0;

  double target(double x) const;
};

struct TaskRange {
  double amp_lo = kAmpMin, amp_hi = kAmpMax;
  double phase_lo = kPhaseMin, phase_hi = kPi;

  void validate() const;
  bool disjoint_from(const TaskRange& o) const;
};

// Train/eval splits of the benchmark. In the identical setting both draw
// from the full ranges; in the skewed setting they come from disjoint halves.
enum class Distribution { identical, skewed };
TaskRange train_range(Distribution d);
TaskRange eval_range(Distribution d);

struct Episode {
  TaskSpec task;
  std::vector<double> support_x, support_y;
  std::vector<double> query_x, query_y;
};

// Evenly spaced cell centers over a training range, one axis per task
// parameter; the discrete support of the adversarial task distribution.
struct AtomGrid {
  std::vector<double> amp_atoms;
  std::vector<double> phase_atoms;

  static AtomGrid over(const TaskRange& range);
  // Nearest cell per axis for an arbitrary task inside (or clamped to) the range.
  std::pair<int, int> bucket(const TaskSpec& t) const;
  std::size_t bucket_index(const TaskSpec& t) const;
};

TaskSpec sample_task(const TaskRange& range, Rng& rng);

struct AtomDraw {
  TaskSpec task;
  int amp_index = 0;
  int phase_index = 0;
};

// Draws (i, j) with probability softmax(tau_u_amp)_i * softmax(tau_u_phase)_j
// and returns the grid task plus the indices for gradient routing.
AtomDraw sample_adversarial_task(const AtomGrid& grid, std::span<const double> tau_u_amp,
                                 std::span<const double> tau_u_phase, Rng& rng);

// Softmax probabilities of one categorical factor (used by the sampler and
// by goodness-of-fit checks).
std::vector<double> categorical_probs(std::span<const double> tau_u);

// k support points and n_query query points, x ~ U(-5, 5), y exact.
Episode make_episode(const TaskSpec& task, int k, int n_query, Rng& rng);

// JSON-lines (one episode per line) for fixture-based tests.
std::string episode_to_json(const Episode& ep);
Episode episode_from_json(const std::string& line);

}  // namespace rmeta::tasks
