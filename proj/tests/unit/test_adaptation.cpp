#include <doctest.h>

#include <cmath>

#include "rmeta/adaptation.hpp"
#include "rmeta/episode_kernels.hpp"
#include "rmeta/errors.hpp"
#include "rmeta/metalearn.hpp"

using namespace rmeta;

namespace {

// hidden=[1] net with a frozen identity first layer behaves like the affine
// model f(x) = w*h + b on h = relu(x); freezing uses the layer-0 rate = 0.
model::ModelParams affine_probe(double w, double b) {
  model::MlpConfig cfg;
  cfg.hidden_dims = {1};
  model::ModelParams m{ad::ParamVector(model::mlp_layout(cfg))};
  m.params.segment_span(0)[0] = 1.0;  // W0
  m.params.segment_span(1)[0] = 0.0;  // b0
  m.params.segment_span(2)[0] = w;    // W1
  m.params.segment_span(3)[0] = b;    // b1
  return m;
}

tasks::Episode fixed_episode(std::vector<double> sx, std::vector<double> sy, std::vector<double> qx,
                             std::vector<double> qy) {
  tasks::Episode ep;
  ep.task = {1.0, 0.0};
  ep.support_x = std::move(sx);
  ep.support_y = std::move(sy);
  ep.query_x = std::move(qx);
  ep.query_y = std::move(qy);
  return ep;
}

}  // namespace

TEST_CASE("zero learning rates leave parameters exactly unchanged") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 3);
  Rng rng(1);
  const tasks::Episode ep = tasks::make_episode({2.0, 0.5}, 5, 10, rng);
  ad::Tape tape;
  const std::vector<double> zero_rates(3, 0.0);
  const model::ModelParams phi = meta::inner_adapt(theta, cfg, zero_rates, ep, 4, tape);
  CHECK(phi.params.values == theta.params.values);
}

TEST_CASE("hand-computed single step on the affine probe") {
  // f(x) = w*relu(x) + b, support {(1, 2)}, w=b=0, eta=0.1:
  // loss = (0-2)^2, dw = 2*(pred-y)*h = -4, db = -4 -> w = b = 0.4
  model::MlpConfig cfg;
  cfg.hidden_dims = {1};
  const model::ModelParams theta = affine_probe(0.0, 0.0);
  const tasks::Episode ep = fixed_episode({1.0}, {2.0}, {1.0}, {2.0});
  ad::Tape tape;
  const std::vector<double> rates{0.0, 0.1};  // layer 0 frozen
  const model::ModelParams phi = meta::inner_adapt(theta, cfg, rates, ep, 1, tape);
  CHECK(phi.params.segment_span(0)[0] == 1.0);
  CHECK(phi.params.segment_span(2)[0] == doctest::Approx(0.4));
  CHECK(phi.params.segment_span(3)[0] == doctest::Approx(0.4));
  // theta untouched
  CHECK(theta.params.segment_span(2)[0] == 0.0);
}

TEST_CASE("steps=4 equals composing four single steps") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 11);
  Rng rng(2);
  const tasks::Episode ep = tasks::make_episode({3.0, 1.0}, 10, 10, rng);
  const std::vector<double> rates(3, 0.01);
  ad::Tape tape;
  const model::ModelParams four = meta::inner_adapt(theta, cfg, rates, ep, 4, tape);
  model::ModelParams composed = theta;
  for (int s = 0; s < 4; ++s) composed = meta::inner_adapt(composed, cfg, rates, ep, 1, tape);
  CHECK(four.params.values == composed.params.values);
}

TEST_CASE("inner_adapt contract violations") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 1);
  Rng rng(4);
  const tasks::Episode ep = tasks::make_episode({1.0, 0.0}, 5, 5, rng);
  const tasks::Episode zero_shot = tasks::make_episode({1.0, 0.0}, 0, 5, rng);
  ad::Tape tape;
  const std::vector<double> rates(3, 0.01);
  CHECK_THROWS_AS(meta::inner_adapt(theta, cfg, rates, ep, 0, tape), ConfigError);
  CHECK_THROWS_AS(meta::inner_adapt(theta, cfg, rates, zero_shot, 1, tape), ConfigError);
}

TEST_CASE("support gradient sum matches the one-step gradient") {
  model::MlpConfig cfg;
  cfg.hidden_dims = {1};
  const model::ModelParams theta = affine_probe(0.0, 0.0);
  const tasks::Episode ep = fixed_episode({1.0}, {2.0}, {1.0}, {2.0});
  ad::Tape tape;
  std::vector<double> gsum;
  const std::vector<double> rates{0.0, 0.1};
  meta::inner_adapt(theta, cfg, rates, ep, 1, tape, &gsum);
  CHECK(gsum[theta.params.layout->offset(2)] == doctest::Approx(-4.0));
  CHECK(gsum[theta.params.layout->offset(3)] == doctest::Approx(-4.0));
}

TEST_CASE("zero-loss episode keeps the curve at exactly zero") {
  model::MlpConfig cfg;
  model::ModelParams zero{ad::ParamVector(model::mlp_layout(cfg))};
  // targets identically zero: the zero network is already exact
  const tasks::Episode ep = fixed_episode({-1.0, 0.5, 2.0}, {0.0, 0.0, 0.0}, {1.0, -2.0}, {0.0, 0.0});
  ad::Tape tape;
  const std::vector<double> rates(3, 0.01);
  const std::vector<double> curve = meta::adaptation_curve(zero, cfg, rates, ep, meta::kCurveSteps, tape);
  CHECK(curve.size() == 10);
  for (double v : curve) CHECK(v == 0.0);
}

TEST_CASE("zero learning rates give a constant curve") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 21);
  Rng rng(9);
  const tasks::Episode ep = tasks::make_episode({2.5, 0.3}, 10, 30, rng);
  ad::Tape tape;
  const std::vector<double> zero_rates(3, 0.0);
  const std::vector<double> curve = meta::adaptation_curve(theta, cfg, zero_rates, ep, meta::kCurveSteps, tape);
  for (double v : curve) CHECK(v == curve[0]);
}

TEST_CASE("empty support yields the unadapted MSE repeated") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 21);
  Rng rng(9);
  const tasks::Episode ep = tasks::make_episode({2.5, 0.3}, 0, 30, rng);
  ad::Tape tape;
  const std::vector<double> rates(3, 0.01);
  const std::vector<double> curve = meta::adaptation_curve(theta, cfg, rates, ep, meta::kCurveSteps, tape);
  const double unadapted = model::mse(model::predict(theta, cfg, ep.query_x), ep.query_y);
  for (double v : curve) CHECK(v == unadapted);
}

TEST_CASE("serial and parallel batch kernels agree bitwise") {
  model::MlpConfig cfg;
  const model::ModelParams theta = model::init_mlp(cfg, 5);
  Rng rng(33);
  std::vector<tasks::Episode> eps;
  for (int i = 0; i < 12; ++i) {
    eps.push_back(tasks::make_episode(tasks::sample_task(tasks::train_range(tasks::Distribution::identical), rng),
                                      8, 25, rng));
  }
  const std::vector<double> rates(3, 0.01);

  std::vector<meta::EpisodeOutputs> serial_out, parallel_out;
  meta::eval_batch_serial(theta, cfg, rates, eps, 4, true, serial_out);
  meta::eval_batch_parallel(theta, cfg, rates, eps, 4, true, parallel_out);
  REQUIRE(serial_out.size() == parallel_out.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(serial_out[i].query_loss == parallel_out[i].query_loss);
    CHECK(serial_out[i].query_grad == parallel_out[i].query_grad);
    CHECK(serial_out[i].support_grad_sum == parallel_out[i].support_grad_sum);
  }

  std::vector<std::vector<double>> serial_curves, parallel_curves;
  meta::curve_batch_serial(theta, cfg, rates, eps, meta::kCurveSteps, serial_curves);
  meta::curve_batch_parallel(theta, cfg, rates, eps, meta::kCurveSteps, parallel_curves);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(serial_curves[i] == parallel_curves[i]);
}
