// Compares the serial reference episode kernels against the OpenMP variants
// on a training-sized workload and reports throughput.

#include <chrono>
#include <cstdio>
#include <vector>

#include "rmeta/episode_kernels.hpp"
#include "rmeta/metalearn.hpp"

using namespace rmeta;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const Clock::time_point t0 = Clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main() {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 1);
  const std::vector<double> rates(3, 0.01);

  Rng rng(7);
  std::vector<tasks::Episode> episodes;
  for (int i = 0; i < 25; ++i) {
    episodes.push_back(
        tasks::make_episode(tasks::sample_task(tasks::train_range(tasks::Distribution::identical), rng), 10, 100, rng));
  }

  std::vector<meta::EpisodeOutputs> out_s, out_p;
  const double t_eval_serial = time_best_of(5, [&] {
    meta::eval_batch_serial(theta, cfg, rates, episodes, 4, true, out_s);
  });
  const double t_eval_parallel = time_best_of(5, [&] {
    meta::eval_batch_parallel(theta, cfg, rates, episodes, 4, true, out_p);
  });

  bool identical = out_s.size() == out_p.size();
  for (std::size_t i = 0; identical && i < out_s.size(); ++i) {
    identical = out_s[i].query_loss == out_p[i].query_loss && out_s[i].query_grad == out_p[i].query_grad;
  }

  std::vector<std::vector<double>> cs, cp;
  const double t_curve_serial = time_best_of(5, [&] {
    meta::curve_batch_serial(theta, cfg, rates, episodes, meta::kCurveSteps, cs);
  });
  const double t_curve_parallel = time_best_of(5, [&] {
    meta::curve_batch_parallel(theta, cfg, rates, episodes, meta::kCurveSteps, cp);
  });
  for (std::size_t i = 0; identical && i < cs.size(); ++i) identical = cs[i] == cp[i];

  std::printf("kernel              serial[ms]  parallel[ms]  speedup\n");
  std::printf("eval_batch   (25ep)   %8.3f      %8.3f    %5.2fx\n", t_eval_serial * 1e3, t_eval_parallel * 1e3,
              t_eval_serial / t_eval_parallel);
  std::printf("curve_batch  (25ep)   %8.3f      %8.3f    %5.2fx\n", t_curve_serial * 1e3, t_curve_parallel * 1e3,
              t_curve_serial / t_curve_parallel);
  std::printf("outputs bitwise identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
