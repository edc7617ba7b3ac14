#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "rmeta/autodiff.hpp"
#include "rmeta/criteria.hpp"
#include "rmeta/errors.hpp"
#include "rmeta/rng.hpp"

using namespace rmeta;

TEST_CASE("reparam_simplex examples") {
  const std::vector<double> a = criteria::reparam_simplex(std::vector<double>{0.0, 0.0});
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(0.5));

  for (double c : {-3.0, 0.0, 17.5}) {
    const std::vector<double> p = criteria::reparam_simplex(std::vector<double>{c, c, c, c});
    for (double v : p) CHECK(v == doctest::Approx(0.25));
  }

  const std::vector<double> q =
      criteria::reparam_simplex(std::vector<double>{std::log(1.0), std::log(3.0)});
  CHECK(q[0] == doctest::Approx(0.25));
  CHECK(q[1] == doctest::Approx(0.75));

  // sums to one, entries positive, shift-invariant
  Rng rng(4);
  std::vector<double> u(9), shifted(9);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = rng.uniform(-5.0, 5.0);
    shifted[i] = u[i] + 3.14;
  }
  const std::vector<double> p1 = criteria::reparam_simplex(u);
  const std::vector<double> p2 = criteria::reparam_simplex(shifted);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK(p1[i] > 0.0);
    CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-12));
    s += p1[i];
  }
  CHECK(std::fabs(s - 1.0) <= 1e-12);
}

TEST_CASE("reparam_nonneg examples") {
  const std::vector<double> v = criteria::reparam_nonneg(std::vector<double>{0.0, -40.0, 40.0});
  CHECK(v[0] == doctest::Approx(std::log(2.0)));
  CHECK(v[1] <= 1e-17);
  CHECK(v[1] > 0.0);
  CHECK(v[2] == doctest::Approx(40.0).epsilon(1e-12));
  // monotone
  CHECK(criteria::reparam_nonneg(std::vector<double>{1.0})[0] >
        criteria::reparam_nonneg(std::vector<double>{0.5})[0]);
}

TEST_CASE("bayes_risk examples") {
  CHECK(criteria::bayes_risk(std::vector<double>{1.0, 2.0, 3.0},
                             std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(2.0));
  CHECK(criteria::bayes_risk(std::vector<double>{7.0}, std::vector<double>{1.0}) == doctest::Approx(7.0));
  CHECK(criteria::bayes_risk(std::vector<double>{2.0, 4.0}, std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(3.5));
  CHECK_THROWS_AS(criteria::bayes_risk(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), ShapeError);
}

TEST_CASE("minimax_risk examples") {
  CHECK(criteria::minimax_risk(std::vector<double>{2.0, 4.0}, std::vector<double>{0.0, 0.0}) ==
        doctest::Approx(3.0));
  CHECK(criteria::minimax_risk(std::vector<double>{2.0, 4.0}, std::vector<double>{-1e6, 0.0}) ==
        doctest::Approx(4.0));
  for (double tau : {-2.0, 0.0, 5.0}) {
    CHECK(criteria::minimax_risk(std::vector<double>{1.3, 1.3, 1.3}, std::vector<double>{tau, 0.0, -tau}) ==
          doctest::Approx(1.3));
  }
  CHECK_THROWS_AS(criteria::minimax_risk(std::vector<double>{1.0}, std::vector<double>{0.0, 0.0}), ShapeError);
}

TEST_CASE("minimax_risk stays inside [min loss, max loss]") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> losses(6), tau(6);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < 6; ++i) {
      losses[i] = rng.uniform(0.0, 10.0);
      tau[i] = rng.uniform(-8.0, 8.0);
      lo = std::min(lo, losses[i]);
      hi = std::max(hi, losses[i]);
    }
    const double r = criteria::minimax_risk(losses, tau);
    CHECK(r >= lo - 1e-12);
    CHECK(r <= hi + 1e-12);
  }
}

TEST_CASE("np_risk examples") {
  // lambda -> 0 reduces to the uniform average
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(criteria::np_risk(std::vector<double>{2.0, 4.0}, std::vector<double>{-inf, -inf}, 0.1) ==
        doctest::Approx(3.0));

  // |T|=2, lambda=(1,0), losses (0.3, 0.1), r=0.1 -> 0.40
  const std::vector<double> lam_u{ad::softplus_inv_scalar(1.0), -inf};
  CHECK(criteria::np_risk(std::vector<double>{0.3, 0.1}, lam_u, 0.1) == doctest::Approx(0.40));
}

TEST_CASE("np multiplier gradient is exactly L - r (pre-reparametrization)") {
  // with losses pinned to r the lagrangian is stationary in every lambda
  const double r = 0.37;
  const std::vector<double> losses{r, r, r};
  ad::Tape tape;
  ad::Tensor lu(3, 1);
  lu.data = {0.2, -1.0, 3.0};
  ad::Var lam_u = tape.leaf(lu);
  ad::Var loss_node = tape.constant(ad::Tensor::column({losses.begin(), losses.end()}));
  ad::Var risk = criteria::np_risk_node(loss_node, lam_u, r);
  tape.backward(risk);
  for (int i = 0; i < 3; ++i) CHECK(tape.adjoint(lam_u).data[static_cast<std::size_t>(i)] == doctest::Approx(0.0));
}

TEST_CASE("np post-reparametrization gradient equals sigmoid(lambda_u)*(L - r)") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> losses(4), lu(4);
    for (std::size_t i = 0; i < 4; ++i) {
      losses[i] = rng.uniform(0.0, 2.0);
      lu[i] = rng.uniform(-3.0, 3.0);
    }
    const double r = 0.4;
    ad::Tape tape;
    ad::Var lam_u = tape.leaf(ad::Tensor::column(lu));
    ad::Var loss_node = tape.constant(ad::Tensor::column({losses.begin(), losses.end()}));
    tape.backward(criteria::np_risk_node(loss_node, lam_u, r));
    for (std::size_t i = 0; i < 4; ++i) {
      const double want = ad::sigmoid_scalar(lu[i]) * (losses[i] - r);
      CHECK(tape.adjoint(lam_u).data[i] == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("minimax logit gradient equals tau_i*(L_i - risk), zero on equal losses") {
  Rng rng(6);
  std::vector<double> losses(5), tau_u(5);
  for (std::size_t i = 0; i < 5; ++i) {
    losses[i] = rng.uniform(0.0, 3.0);
    tau_u[i] = rng.uniform(-2.0, 2.0);
  }
  ad::Tape tape;
  ad::Var tu = tape.leaf(ad::Tensor::column(tau_u));
  ad::Var ls = tape.constant(ad::Tensor::column({losses.begin(), losses.end()}));
  ad::Var risk = criteria::minimax_risk_node(ls, tu);
  tape.backward(risk);
  const std::vector<double> tau = criteria::reparam_simplex(tau_u);
  const double rv = tape.value(risk).data[0];
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(tape.adjoint(tu).data[i] == doctest::Approx(tau[i] * (losses[i] - rv)).epsilon(1e-10));
  }

  // equal losses: gradient vanishes identically
  ad::Tape t2;
  ad::Var tu2 = t2.leaf(ad::Tensor::column(tau_u));
  ad::Var eq = t2.constant(ad::Tensor::column(std::vector<double>(5, 1.1)));
  t2.backward(criteria::minimax_risk_node(eq, tu2));
  for (std::size_t i = 0; i < 5; ++i) CHECK(t2.adjoint(tu2).data[i] == doctest::Approx(0.0));
}

TEST_CASE("adding a constant to every loss shifts minimax_risk and keeps its gradient") {
  Rng rng(17);
  std::vector<double> losses(4), tau_u(4);
  for (std::size_t i = 0; i < 4; ++i) {
    losses[i] = rng.uniform(0.0, 2.0);
    tau_u[i] = rng.uniform(-2.0, 2.0);
  }
  const double c = 5.25;
  std::vector<double> shifted = losses;
  for (double& v : shifted) v += c;
  CHECK(criteria::minimax_risk(shifted, tau_u) ==
        doctest::Approx(criteria::minimax_risk(losses, tau_u) + c).epsilon(1e-12));

  auto grad_of = [&](const std::vector<double>& ls) {
    ad::Tape tape;
    ad::Var tu = tape.leaf(ad::Tensor::column(tau_u));
    ad::Var l = tape.constant(ad::Tensor::column({ls.begin(), ls.end()}));
    tape.backward(criteria::minimax_risk_node(l, tu));
    std::vector<double> g(4);
    for (std::size_t i = 0; i < 4; ++i) g[i] = tape.adjoint(tu).data[i];
    return g;
  };
  const std::vector<double> g1 = grad_of(losses);
  const std::vector<double> g2 = grad_of(shifted);
  for (std::size_t i = 0; i < 4; ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-9));
}

TEST_CASE("criterion degeneracies match bayes on random loss vectors") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 9;
    std::vector<double> losses(n);
    for (double& v : losses) v = rng.uniform(0.0, 10.0);
    const std::vector<double> prior(n, 1.0 / static_cast<double>(n));
    const double bayes = criteria::bayes_risk(losses, prior);
    const std::vector<double> zeros(n, 0.0);
    CHECK(std::fabs(criteria::minimax_risk(losses, zeros) - bayes) <= 1e-12);
    const std::vector<double> neg_inf(n, -std::numeric_limits<double>::infinity());
    CHECK(std::fabs(criteria::np_risk(losses, neg_inf, 0.1) - bayes) <= 1e-12);
  }
}

TEST_CASE("risk report JSON carries the recomputable pieces") {
  criteria::RiskReport rep;
  rep.task_ids = {"3:7", "4:1"};
  rep.per_task_losses = {0.5, 1.5};
  rep.aggregate = 1.0;
  rep.constrained_values = {0.5, 0.5};
  const std::string j = rep.to_json();
  CHECK(j.find("\"aggregate\"") != std::string::npos);
  CHECK(j.find("3:7") != std::string::npos);
}

TEST_CASE("adversary flat round trip") {
  criteria::AdversaryParams adv;
  adv.kind = criteria::AdversaryKind::minimax;
  adv.tau_u_amp = {1.0, 2.0};
  adv.tau_u_phase = {3.0, 4.0, 5.0};
  std::vector<double> flat;
  adv.to_flat(flat);
  CHECK(flat == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});
  flat[4] = -1.0;
  adv.from_flat(flat);
  CHECK(adv.tau_u_phase[2] == -1.0);
}
