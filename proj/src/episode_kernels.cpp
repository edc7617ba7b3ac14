#include "rmeta/episode_kernels.hpp"

#include <exception>

namespace rmeta::meta {

namespace {

// Exceptions cannot unwind out of an OpenMP region; the first one is caught
// per thread and rethrown after the join.
class FirstException {
 public:
  template <typename F>
  void run(F&& fn) noexcept {
    try {
      fn();
    } catch (...) {
#pragma omp critical(rmeta_first_exception)
      {
        if (!ptr_) ptr_ = std::current_exception();
      }
    }
  }
  void rethrow_if_set() {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::exception_ptr ptr_;
};

}  // namespace

void eval_batch_serial(const model::ModelParams& theta, const model::MlpConfig& cfg,
                       std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                       int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out) {
  out.resize(episodes.size());
  ad::Tape tape;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    eval_episode(theta, cfg, eta_layers, episodes[i], inner_steps, want_grads, tape, out[i]);
  }
}

void eval_batch_parallel(const model::ModelParams& theta, const model::MlpConfig& cfg,
                         std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                         int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out) {
  out.resize(episodes.size());
  const std::int64_t n = static_cast<std::int64_t>(episodes.size());
  FirstException err;
#pragma omp parallel
  {
    ad::Tape tape;  // one tape per thread, reused across its episodes
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
      err.run([&] {
        eval_episode(theta, cfg, eta_layers, episodes[static_cast<std::size_t>(i)], inner_steps, want_grads,
                     tape, out[static_cast<std::size_t>(i)]);
      });
    }
  }
  err.rethrow_if_set();
}

void eval_batch(const model::ModelParams& theta, const model::MlpConfig& cfg,
                std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out, ExecMode mode) {
  if (mode == ExecMode::serial) {
    eval_batch_serial(theta, cfg, eta_layers, episodes, inner_steps, want_grads, out);
  } else {
    eval_batch_parallel(theta, cfg, eta_layers, episodes, inner_steps, want_grads, out);
  }
}

void curve_batch_serial(const model::ModelParams& theta, const model::MlpConfig& cfg,
                        std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                        int max_steps, std::vector<std::vector<double>>& out) {
  out.resize(episodes.size());
  ad::Tape tape;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    out[i] = adaptation_curve(theta, cfg, eta_layers, episodes[i], max_steps, tape);
  }
}

void curve_batch_parallel(const model::ModelParams& theta, const model::MlpConfig& cfg,
                          std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                          int max_steps, std::vector<std::vector<double>>& out) {
  out.resize(episodes.size());
  const std::int64_t n = static_cast<std::int64_t>(episodes.size());
  FirstException err;
#pragma omp parallel
  {
    ad::Tape tape;
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
      err.run([&] {
        out[static_cast<std::size_t>(i)] =
            adaptation_curve(theta, cfg, eta_layers, episodes[static_cast<std::size_t>(i)], max_steps, tape);
      });
    }
  }
  err.rethrow_if_set();
}

void curve_batch(const model::ModelParams& theta, const model::MlpConfig& cfg,
                 std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                 int max_steps, std::vector<std::vector<double>>& out, ExecMode mode) {
  if (mode == ExecMode::serial) {
    curve_batch_serial(theta, cfg, eta_layers, episodes, max_steps, out);
  } else {
    curve_batch_parallel(theta, cfg, eta_layers, episodes, max_steps, out);
  }
}

}  // namespace rmeta::meta
