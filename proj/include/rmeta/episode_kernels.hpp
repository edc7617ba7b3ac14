#pragma once

#include <span>
#include <vector>

#include "rmeta/adaptation.hpp"
#include "rmeta/config.hpp"

namespace rmeta::meta {

// Batch drivers over the per-episode kernels. Episodes are independent, so
// the parallel variant distributes them across OpenMP threads; every episode
// writes its own slot and the serial and parallel paths produce identical
// output for any thread count. The serial variant is the reference the tests
// and the benchmark compare against.

void eval_batch_serial(const model::ModelParams& theta, const model::MlpConfig& cfg,
                       std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                       int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out);

void eval_batch_parallel(const model::ModelParams& theta, const model::MlpConfig& cfg,
                         std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                         int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out);

void eval_batch(const model::ModelParams& theta, const model::MlpConfig& cfg,
                std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                int inner_steps, bool want_grads, std::vector<EpisodeOutputs>& out, ExecMode mode);

void curve_batch_serial(const model::ModelParams& theta, const model::MlpConfig& cfg,
                        std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                        int max_steps, std::vector<std::vector<double>>& out);

void curve_batch_parallel(const model::ModelParams& theta, const model::MlpConfig& cfg,
                          std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                          int max_steps, std::vector<std::vector<double>>& out);

void curve_batch(const model::ModelParams& theta, const model::MlpConfig& cfg,
                 std::span<const double> eta_layers, std::span<const tasks::Episode> episodes,
                 int max_steps, std::vector<std::vector<double>>& out, ExecMode mode);

}  // namespace rmeta::meta
