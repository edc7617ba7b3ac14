#include "rmeta/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rmeta/errors.hpp"
#include "rmeta/io_util.hpp"

namespace rmeta::model {

void MlpConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("mlp dims must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("mlp needs at least one hidden layer");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("mlp hidden dims must be >= 1");
  }
}

ad::LayoutPtr mlp_layout(const MlpConfig& cfg) {
  cfg.validate();
  std::vector<ad::SegmentSpec> segs;
  int in = cfg.input_dim;
  for (int l = 0; l < cfg.layer_count(); ++l) {
    const int out = l < static_cast<int>(cfg.hidden_dims.size()) ? cfg.hidden_dims[static_cast<std::size_t>(l)]
                                                                 : cfg.output_dim;
    segs.push_back({"W" + std::to_string(l), out, in, l});
    segs.push_back({"b" + std::to_string(l), out, 1, l});
    in = out;
  }
  return std::make_shared<const ad::Layout>(std::move(segs));
}

ModelParams init_mlp(const MlpConfig& cfg, std::uint64_t seed, double scale) {
  ad::LayoutPtr layout = mlp_layout(cfg);
  ad::ParamVector p(layout);
  Rng rng(seed);
  for (std::size_t i = 0; i < layout->segment_count(); ++i) {
    const ad::SegmentSpec& s = layout->segment(i);
    std::span<double> dst = p.segment_span(i);
    if (s.name[0] == 'W') {
      const double bound = scale * std::sqrt(6.0 / static_cast<double>(s.cols));
      for (double& v : dst) v = rng.uniform(-bound, bound);
    }
    // biases stay zero
  }
  return {std::move(p)};
}

namespace {

inline double activate(double z, Activation a) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

}  // namespace

std::vector<double> predict(const ModelParams& m, const MlpConfig& cfg, std::span<const double> x) {
  const ad::Layout& lay = *m.params.layout;
  const int n_layers = cfg.layer_count();
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  int in = cfg.input_dim;
  const std::size_t n = x.size();
  for (int l = 0; l < n_layers; ++l) {
    const ad::SegmentSpec& ws = lay.segment(static_cast<std::size_t>(2 * l));
    const int out = ws.rows;
    std::span<const double> w = m.params.segment_span(static_cast<std::size_t>(2 * l));
    std::span<const double> b = m.params.segment_span(static_cast<std::size_t>(2 * l) + 1);
    next.assign(static_cast<std::size_t>(out) * n, 0.0);
    for (int i = 0; i < out; ++i) {
      for (int p = 0; p < in; ++p) {
        const double wv = w[static_cast<std::size_t>(i) * in + p];
        if (wv == 0.0) continue;
        const double* src = cur.data() + static_cast<std::size_t>(p) * n;
        double* dst = next.data() + static_cast<std::size_t>(i) * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += wv * src[j];
      }
      double* dst = next.data() + static_cast<std::size_t>(i) * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += b[static_cast<std::size_t>(i)];
      if (l + 1 < n_layers) {
        for (std::size_t j = 0; j < n; ++j) dst[j] = activate(dst[j], cfg.activation);
      }
    }
    cur.swap(next);
    in = out;
  }
  cur.resize(n);  // output_dim == 1: first (only) output row
  return cur;
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("mse: batch lengths differ");
  if (pred.empty()) throw ShapeError("mse: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

ad::Var mlp_forward(ad::Tape& tape, const MlpConfig& cfg, const ad::BoundParams& params,
                    std::span<const double> x) {
  if (x.empty()) throw ShapeError("mlp_forward: empty batch");
  const int n = static_cast<int>(x.size());
  ad::Var h = tape.constant(ad::Tensor::row({x.begin(), x.end()}));
  ad::Var ones = tape.constant(ad::Tensor::ones(1, n));
  const int n_layers = cfg.layer_count();
  for (int l = 0; l < n_layers; ++l) {
    ad::Var w = params.segments[static_cast<std::size_t>(2 * l)];
    ad::Var b = params.segments[static_cast<std::size_t>(2 * l) + 1];
    ad::Var z = matmul(w, h) + matmul(b, ones);
    h = l + 1 < n_layers ? (cfg.activation == Activation::relu ? relu(z) : tanh(z)) : z;
  }
  return h;
}

ad::Var mse_loss(ad::Var pred_row, std::span<const double> target) {
  if (target.empty()) throw ShapeError("mse_loss: empty batch");
  ad::Tape& tape = *pred_row.tape;
  ad::Var y = tape.constant(ad::Tensor::row({target.begin(), target.end()}));
  return mean(square(pred_row - y));
}

void save_params(const ad::ParamVector& p, const std::string& path) {
  io::write_doubles_le(path, p.values);

  nlohmann::json sidecar;
  sidecar["total"] = p.values.size();
  sidecar["segments"] = nlohmann::json::array();
  for (std::size_t i = 0; i < p.layout->segment_count(); ++i) {
    const ad::SegmentSpec& s = p.layout->segment(i);
    sidecar["segments"].push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"layer", s.layer}});
  }
  io::atomic_write_text(path + ".json", sidecar.dump(2) + "\n");
}

ad::ParamVector load_params(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw ConfigError("cannot open layout sidecar " + path + ".json");
  nlohmann::json sidecar = nlohmann::json::parse(in);
  std::vector<ad::SegmentSpec> segs;
  for (const auto& s : sidecar.at("segments")) {
    segs.push_back({s.at("name").get<std::string>(), s.at("rows").get<std::int32_t>(),
                    s.at("cols").get<std::int32_t>(), s.at("layer").get<std::int32_t>()});
  }
  auto layout = std::make_shared<const ad::Layout>(std::move(segs));
  std::vector<double> values = io::read_doubles_le(path);
  if (values.size() != layout->total_size()) {
    throw ShapeError("parameter file length does not match sidecar layout");
  }
  return ad::ParamVector(layout, std::move(values));
}

}  // namespace rmeta::model
