#include <doctest.h>

#include <cmath>
#include <memory>

#include "../oracles.hpp"
#include "rmeta/autodiff.hpp"
#include "rmeta/model.hpp"
#include "rmeta/rng.hpp"

using namespace rmeta;

namespace {

ad::LayoutPtr scalar_layout(const std::string& name) {
  return std::make_shared<const ad::Layout>(std::vector<ad::SegmentSpec>{{name, 1, 1, 0}});
}

ad::LayoutPtr empty_layout() { return std::make_shared<const ad::Layout>(std::vector<ad::SegmentSpec>{}); }

ad::ParamVector scalar_param(const std::string& name, double v) {
  ad::ParamVector p(scalar_layout(name));
  p.values[0] = v;
  return p;
}

// Random smooth-ish expression over both players, rebuilt identically from
// the same structure seed. Exercises every supported op kind across seeds.
ad::Var build_random_expr(ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams& al,
                          std::uint64_t structure_seed, bool allow_kinks) {
  Rng rng(structure_seed);
  std::vector<ad::Var> vec3{th.segments[0], al.segments[0]};  // 3x1 pool
  std::vector<ad::Var> vec2;                                  // 2x1 pool
  std::vector<ad::Var> scalars{tape.constant_scalar(0.7), al.segments[1]};

  ad::Tensor c3(3, 1);
  c3.data = {0.4, -0.3, 0.9};
  vec3.push_back(tape.constant(c3));

  auto pick = [&](const std::vector<ad::Var>& pool) { return pool[rng.next_u64() % pool.size()]; };

  const int n_ops = 8 + static_cast<int>(rng.next_u64() % 14);
  for (int i = 0; i < n_ops; ++i) {
    switch (rng.next_u64() % 10) {
      case 0: vec3.push_back(sin(pick(vec3))); break;
      case 1: vec3.push_back(tanh(pick(vec3))); break;
      case 2: vec3.push_back(softplus(pick(vec3))); break;
      case 3: vec3.push_back(square(pick(vec3))); break;
      case 4: {
        // log kept away from zero
        ad::Var x = softplus(pick(vec3)) + tape.constant_scalar(0.2);
        vec3.push_back(log(x));
        break;
      }
      case 5:
        if (allow_kinks) {
          vec3.push_back(relu(pick(vec3)));
        } else {
          vec3.push_back(softmax(pick(vec3)));
        }
        break;
      case 6: vec3.push_back(pick(vec3) + pick(vec3)); break;
      case 7: vec3.push_back(pick(vec3) * pick(vec3)); break;
      case 8: vec3.push_back(pick(vec3) - (pick(scalars) * pick(vec3))); break;
      case 9: vec2.push_back(matmul(th.segments[1], pick(vec3))); break;
    }
  }

  ad::Var out = mean(square(pick(vec3))) + pick(scalars) * mean(pick(vec3));
  if (!vec2.empty()) out = out + sum(tanh(pick(vec2)));
  out = out + sum(pick(vec3) * pick(vec3)) * mean(softplus(al.segments[0]));
  return out;
}

struct TwoPlayerSetup {
  ad::ParamVector theta;
  ad::ParamVector alpha;
};

TwoPlayerSetup random_setup(std::uint64_t value_seed) {
  Rng rng(value_seed);
  auto th_layout = std::make_shared<const ad::Layout>(
      std::vector<ad::SegmentSpec>{{"tv", 3, 1, 0}, {"tm", 2, 3, 1}});
  auto al_layout = std::make_shared<const ad::Layout>(
      std::vector<ad::SegmentSpec>{{"av", 3, 1, 0}, {"as", 1, 1, 0}});
  TwoPlayerSetup s{ad::ParamVector(th_layout), ad::ParamVector(al_layout)};
  for (double& v : s.theta.values) v = rng.uniform(-1.2, 1.2);
  for (double& v : s.alpha.values) v = rng.uniform(-1.2, 1.2);
  return s;
}

// True when any relu input sits close enough to zero that a finite
// difference step could cross the kink.
bool relu_near_kink(const ad::Tape& tape) {
  for (std::size_t i = 0; i < tape.size(); ++i) {
    const auto id = static_cast<std::int32_t>(i);
    if (tape.node_op(id) != ad::Op::kRelu) continue;
    const ad::Tensor& in = tape.node_value(tape.node_input(id));
    for (double v : in.data) {
      if (std::fabs(v) < 0.02) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("evaluate: direct substitution examples") {
  ad::ScalarFn f_square = [](ad::Tape&, const ad::BoundParams& th, const ad::BoundParams&) {
    return square(th.segments[0]);
  };
  CHECK(ad::evaluate(f_square, scalar_param("x", 3.0), ad::ParamVector(empty_layout())) == doctest::Approx(9.0));

  ad::ScalarFn f_prod = [](ad::Tape&, const ad::BoundParams& th, const ad::BoundParams& al) {
    return th.segments[0] * al.segments[0];
  };
  CHECK(ad::evaluate(f_prod, scalar_param("x", 2.0), scalar_param("y", 5.0)) == doctest::Approx(10.0));
}

TEST_CASE("evaluate: zero-weight MLP with zero targets has zero loss") {
  model::MlpConfig cfg;
  cfg.hidden_dims = {4, 4};
  ad::ParamVector zero(model::mlp_layout(cfg));
  const std::vector<double> x{-1.0, 0.5, 2.0};
  const std::vector<double> y{0.0, 0.0, 0.0};
  ad::ScalarFn f = [&](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams&) {
    return model::mse_loss(model::mlp_forward(tape, cfg, th, x), y);
  };
  CHECK(ad::evaluate(f, zero, ad::ParamVector(empty_layout())) == doctest::Approx(0.0));
}

TEST_CASE("gradient: analytic examples") {
  ad::ScalarFn f_square = [](ad::Tape&, const ad::BoundParams& th, const ad::BoundParams&) {
    return square(th.segments[0]);
  };
  ad::Gradient g = ad::gradient(f_square, ad::Player::minimizer, scalar_param("x", 3.0),
                                ad::ParamVector(empty_layout()));
  CHECK(g.values[0] == doctest::Approx(6.0));

  ad::ScalarFn f_prod = [](ad::Tape&, const ad::BoundParams& th, const ad::BoundParams& al) {
    return th.segments[0] * al.segments[0];
  };
  const ad::ParamVector px = scalar_param("x", 1.0);
  const ad::ParamVector py = scalar_param("y", 2.0);
  CHECK(ad::gradient(f_prod, ad::Player::minimizer, px, py).values[0] == doctest::Approx(2.0));
  CHECK(ad::gradient(f_prod, ad::Player::maximizer, px, py).values[0] == doctest::Approx(1.0));
}

TEST_CASE("gradient of a random MLP MSE matches finite differences") {
  model::MlpConfig cfg;
  cfg.hidden_dims = {4, 4};
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 10 && seed <= 100; ++seed) {
    model::ModelParams m = model::init_mlp(cfg, seed);
    Rng rng(seed * 77 + 5);
    std::vector<double> x(8), y(8);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(-5.0, 5.0);
      y[i] = rng.uniform(-5.0, 5.0);
    }
    ad::ScalarFn f = [&](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams&) {
      return model::mse_loss(model::mlp_forward(tape, cfg, th, x), y);
    };
    const ad::ParamVector alpha(empty_layout());

    // finite differences are meaningless across a relu kink; regenerate
    ad::Tape probe;
    ad::BoundParams bp = ad::bind(probe, m.params);
    model::mse_loss(model::mlp_forward(probe, cfg, bp, x), y);
    if (relu_near_kink(probe)) continue;
    ++checked;

    const ad::Gradient g = ad::gradient(f, ad::Player::minimizer, m.params, alpha);
    oracles::ScalarOfVec primal = [&](const std::vector<double>& vals) {
      ad::ParamVector p(m.params.layout, vals);
      return ad::evaluate(f, p, alpha);
    };
    const std::vector<double> fd = oracles::fd_gradient(primal, m.params.values);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      CHECK(oracles::rel_err(g.values[i], fd[i]) <= 1e-5);
    }
  }
  CHECK(checked == 10);
}

TEST_CASE("gradient-check property over random expressions") {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 25 && seed < 200; ++seed) {
    const TwoPlayerSetup s = random_setup(seed * 31 + 7);
    ad::ScalarFn f = [&, seed](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams& al) {
      return build_random_expr(tape, th, al, seed, /*allow_kinks=*/true);
    };

    // skip instances where a relu sits within FD reach of its kink
    ad::Tape probe;
    ad::BoundParams bt = ad::bind(probe, s.theta);
    ad::BoundParams ba = ad::bind(probe, s.alpha);
    build_random_expr(probe, bt, ba, seed, true);
    if (relu_near_kink(probe)) continue;

    for (ad::Player player : {ad::Player::minimizer, ad::Player::maximizer}) {
      const ad::Gradient g = ad::gradient(f, player, s.theta, s.alpha);
      const ad::ParamVector& wrt = player == ad::Player::minimizer ? s.theta : s.alpha;
      oracles::ScalarOfVec primal = [&](const std::vector<double>& vals) {
        ad::ParamVector p(wrt.layout, vals);
        return player == ad::Player::minimizer ? ad::evaluate(f, p, s.alpha) : ad::evaluate(f, s.theta, p);
      };
      const std::vector<double> fd = oracles::fd_gradient(primal, wrt.values);
      for (std::size_t i = 0; i < fd.size(); ++i) {
        CHECK(oracles::rel_err(g.values[i], fd[i]) <= 2e-5);
      }
    }
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("mixed_hvp: two-parameter examples against the dense Hessian") {
  // f = theta^2 * alpha at (2, 1): D2_{theta,alpha} = 2*theta = 4, v = 4 -> 16
  ad::ScalarFn f = [](ad::Tape&, const ad::BoundParams& th, const ad::BoundParams& al) {
    return square(th.segments[0]) * al.segments[0];
  };
  const ad::ParamVector th = scalar_param("th", 2.0);
  const ad::ParamVector al = scalar_param("al", 1.0);
  ad::Gradient v(al.layout);
  v.values[0] = 4.0;  // grad_alpha f = theta^2
  const ad::Gradient h = ad::mixed_hvp(f, th, al, v, ad::Player::minimizer);
  CHECK(h.values[0] == doctest::Approx(16.0).epsilon(1e-6));

  const auto dense = oracles::fd_mixed_hessian(
      [&](const std::vector<double>& a, const std::vector<double>& b) {
        return a[0] * a[0] * b[0];
      },
      th.values, al.values);
  CHECK(dense[0][0] * v.values[0] == doctest::Approx(16.0).epsilon(1e-4));

  // bilinear: the mixed block is the constant 1, so the hvp returns v
  ad::ScalarFn g = [](ad::Tape&, const ad::BoundParams& t, const ad::BoundParams& a) {
    return t.segments[0] * a.segments[0];
  };
  ad::Gradient c(al.layout);
  c.values[0] = 3.7;
  CHECK(ad::mixed_hvp(g, th, al, c, ad::Player::minimizer).values[0] == doctest::Approx(3.7).epsilon(1e-8));

  // zero direction short-circuits to a zero vector
  ad::Gradient z(al.layout);
  CHECK(ad::mixed_hvp(g, th, al, z, ad::Player::minimizer).values[0] == 0.0);
}

TEST_CASE("hvp oracle property: random functions vs dense mixed Hessian") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const TwoPlayerSetup s = random_setup(seed * 101 + 3);
    ad::ScalarFn f = [&, seed](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams& al) {
      return build_random_expr(tape, th, al, seed, /*allow_kinks=*/false);
    };
    auto primal = [&](const std::vector<double>& tvals, const std::vector<double>& avals) {
      return ad::evaluate(f, ad::ParamVector(s.theta.layout, tvals), ad::ParamVector(s.alpha.layout, avals));
    };

    Rng rng(seed + 999);
    ad::Gradient v(s.alpha.layout);
    for (double& x : v.values) x = rng.uniform(-1.0, 1.0);

    const ad::Gradient got = ad::mixed_hvp(f, s.theta, s.alpha, v, ad::Player::minimizer);
    const auto dense = oracles::fd_mixed_hessian(primal, s.theta.values, s.alpha.values);
    double want_inf = 0.0;
    std::vector<double> want(s.theta.size(), 0.0);
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
      for (std::size_t j = 0; j < s.alpha.size(); ++j) want[i] += dense[i][j] * v.values[j];
      want_inf = std::max(want_inf, std::fabs(want[i]));
    }
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
      CHECK(std::fabs(got.values[i] - want[i]) <= 1e-4 * std::max(want_inf, 0.1));
    }

    // swapped block against the transposed dense Hessian
    ad::Gradient u(s.theta.layout);
    for (double& x : u.values) x = rng.uniform(-1.0, 1.0);
    const ad::Gradient got2 = ad::mixed_hvp(f, s.theta, s.alpha, u, ad::Player::maximizer);
    std::vector<double> want2(s.alpha.size(), 0.0);
    double want2_inf = 0.0;
    for (std::size_t j = 0; j < s.alpha.size(); ++j) {
      for (std::size_t i = 0; i < s.theta.size(); ++i) want2[j] += dense[i][j] * u.values[i];
      want2_inf = std::max(want2_inf, std::fabs(want2[j]));
    }
    for (std::size_t j = 0; j < s.alpha.size(); ++j) {
      CHECK(std::fabs(got2.values[j] - want2[j]) <= 1e-4 * std::max(want2_inf, 0.1));
    }
  }
}

TEST_CASE("mixed_hvp is linear in the direction") {
  const TwoPlayerSetup s = random_setup(424242);
  ad::ScalarFn f = [&](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams& al) {
    return build_random_expr(tape, th, al, 5, /*allow_kinks=*/false);
  };
  Rng rng(7);
  ad::Gradient v1(s.alpha.layout), v2(s.alpha.layout), mix(s.alpha.layout);
  const double a = 1.7, b = -0.6;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    v1.values[i] = rng.uniform(-1.0, 1.0);
    v2.values[i] = rng.uniform(-1.0, 1.0);
    mix.values[i] = a * v1.values[i] + b * v2.values[i];
  }
  const ad::Gradient h1 = ad::mixed_hvp(f, s.theta, s.alpha, v1, ad::Player::minimizer);
  const ad::Gradient h2 = ad::mixed_hvp(f, s.theta, s.alpha, v2, ad::Player::minimizer);
  const ad::Gradient hm = ad::mixed_hvp(f, s.theta, s.alpha, mix, ad::Player::minimizer);
  for (std::size_t i = 0; i < hm.size(); ++i) {
    const double want = a * h1.values[i] + b * h2.values[i];
    CHECK(std::fabs(hm.values[i] - want) <= 1e-4 * std::max(1.0, std::fabs(want)));
  }
}

TEST_CASE("identical inputs give bitwise-identical gradients") {
  const TwoPlayerSetup s = random_setup(11);
  ad::ScalarFn f = [&](ad::Tape& tape, const ad::BoundParams& th, const ad::BoundParams& al) {
    return build_random_expr(tape, th, al, 3, true);
  };
  const ad::Gradient g1 = ad::gradient(f, ad::Player::minimizer, s.theta, s.alpha);
  const ad::Gradient g2 = ad::gradient(f, ad::Player::minimizer, s.theta, s.alpha);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1.values[i] == g2.values[i]);
}
