#pragma once

#include <span>
#include <string>
#include <vector>

#include "rmeta/autodiff.hpp"
#include "rmeta/param_vector.hpp"
#include "rmeta/rng.hpp"

namespace rmeta::model {

enum class Activation { relu, tanh };

// Fully connected regression network; dims are fixed at construction and the
// layer partition is exposed so per-layer inner learning rates can attach.
struct MlpConfig {
  int input_dim = 1;
  std::vector<int> hidden_dims = {40, 40};
  int output_dim = 1;
  Activation activation = Activation::relu;

  int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
  void validate() const;
};

struct ModelParams {
  ad::ParamVector params;
};

// Shared segment layout for a config: per affine layer l, weight "Wl"
// (out x in) and bias "bl" (out x 1), both tagged layer l.
ad::LayoutPtr mlp_layout(const MlpConfig& cfg);

// Fan-in scaled uniform weights (bound scale*sqrt(6/fan_in)), zero biases.
// Deterministic in the seed.
ModelParams init_mlp(const MlpConfig& cfg, std::uint64_t seed, double scale = 1.0);

// Plain forward pass over a batch of scalar inputs (no tape).
std::vector<double> predict(const ModelParams& m, const MlpConfig& cfg, std::span<const double> x);

// Mean squared error over equal-length batches; empty batches are an error.
double mse(std::span<const double> pred, std::span<const double> target);

// Tape forward pass: inputs enter as a constant 1 x n row and flow through
// the layers as (out x n) activations, so one graph covers the whole batch.
// Bias broadcast across the batch is a rank-one matmul with a constant ones
// row. Returns the 1 x n prediction row.
ad::Var mlp_forward(ad::Tape& tape, const MlpConfig& cfg, const ad::BoundParams& params,
                    std::span<const double> x);

// mean((pred - target)^2) on the tape.
ad::Var mse_loss(ad::Var pred_row, std::span<const double> target);

// Parameter save/load: flat little-endian float64 array plus a JSON sidecar
// describing the layout. `path` is the array file; sidecar is path + ".json".
void save_params(const ad::ParamVector& p, const std::string& path);
ad::ParamVector load_params(const std::string& path);

}  // namespace rmeta::model
