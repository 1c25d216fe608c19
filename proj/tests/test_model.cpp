#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pdfm/convex_oracle.hpp"
#include "pdfm/fairness.hpp"
#include "pdfm/model.hpp"

using namespace pdfm;

namespace {

double rel_error(const Gradient& a, const Gradient& b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace

TEST_CASE("parameter count of the default network") {
  NetworkArch arch;
  arch.input_dim = 12;
  CHECK(arch.param_count() == 2201);
  CHECK(NetworkArch::linear(2, false).param_count() == 2);
  CHECK(NetworkArch::linear(2, true).param_count() == 3);
}

TEST_CASE("init is deterministic, bounded and has zero biases") {
  NetworkArch arch;
  arch.input_dim = 12;
  const ParamVector a = init_params(arch, 7);
  CHECK(a == init_params(arch, 7));
  CHECK_FALSE(a == init_params(arch, 8));
  for (const LayerShape& ls : arch.layers()) {
    const double bound = std::sqrt(6.0 / (ls.in + ls.out));
    for (int i = 0; i < ls.in * ls.out; ++i) CHECK(std::abs(a[ls.w_offset + i]) <= bound);
    for (int o = 0; o < ls.out; ++o) CHECK(a[ls.b_offset + o] == 0.0);
  }
}

TEST_CASE("forward pass") {
  NetworkArch arch;
  arch.input_dim = 3;
  const ParamVector zero = ParamVector::zeros(arch);
  const double e[3] = {1.0, -2.0, 0.5};
  const Output o = forward(zero, e);
  CHECK(o.logit == 0.0);
  CHECK(o.prob == 0.5);

  NetworkArch tiny;
  tiny.input_dim = 1;
  tiny.hidden_dims = {1};
  const ParamVector hand(tiny, {1.0, 0.0, 2.0, -1.0});
  const double x[1] = {3.0};
  CHECK(forward(hand, x).logit == doctest::Approx(5.0).epsilon(1e-15));

  const ParamVector rnd = init_params(arch, 1);
  const Output r = forward(rnd, e);
  CHECK(r.prob == doctest::Approx(1.0 / (1.0 + std::exp(-r.logit))).epsilon(1e-15));

  const double wrong[2] = {1.0, 2.0};
  CHECK_THROWS_AS(forward(rnd, wrong), DimensionError);
}

TEST_CASE("cross-entropy values") {
  const Batch b = testing::random_batch(20, 3, 1);
  NetworkArch arch;
  arch.input_dim = 3;
  CHECK(loss_ce(ParamVector::zeros(arch), b) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  Batch one(1);
  const double e[1] = {1.0};
  one.add(e, 1, 0, 0);
  const ParamVector theta(NetworkArch::linear(1, false), {5.0});
  CHECK(loss_ce(theta, one) == doctest::Approx(0.006715348489118).epsilon(1e-10));

  // Driving the logit toward the label shrinks the loss monotonically.
  double prev = INFINITY;
  for (double w : {0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0}) {
    const double l = loss_ce(ParamVector(NetworkArch::linear(1, false), {w}), one);
    CHECK(l <= prev);
    CHECK(l >= 0.0);
    prev = l;
  }
  // Clamping keeps extreme logits finite.
  CHECK(std::isfinite(loss_ce(ParamVector(NetworkArch::linear(1, false), {-1e6}), one)));
}

TEST_CASE("finite differences") {
  const ParamVector theta(NetworkArch::linear(2, false), {1.0, 2.0});
  const auto g = finite_diff_grad([](const ParamVector& t) { return t[0] * t[0] + t[1] * t[1]; },
                                  theta, 1e-5);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));
  const auto z = finite_diff_grad([](const ParamVector&) { return 3.0; }, theta, 1e-5);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  CHECK_THROWS(finite_diff_grad([](const ParamVector&) { return 0.0; }, theta, 0.0));
}

TEST_CASE("zero multiplier gives the plain loss gradient") {
  const Batch b = testing::random_batch(30, 4, 2);
  const ParamVector theta = init_params(testing::small_arch(4), 5);
  CHECK(grad_lagrangian(theta, DualVector::scalar(0.0), b, 0.01) == grad_loss_ce(theta, b));
}

TEST_CASE("analytic gradients agree with finite differences") {
  Rng rng(2024);
  int checked = 0;
  for (int draw = 0; draw < 40; ++draw) {
    const Batch b = testing::random_batch(12 + draw, 4, 500 + draw);
    const ParamVector theta = testing::generic_params(testing::small_arch(4), 900 + draw);
    const double mu = rng.uniform(0.0, 2.0);
    const double c = rng.uniform(0.0, 0.1);
    if (std::abs(dbc(logits(theta, b), b.groups())) < 1e-6) continue;
    const TaskObjective obj{Penalty::dbc, mu, c};
    const auto fd = finite_diff_grad(
        [&](const ParamVector& t) { return evaluate_objective(t, b, obj).lagrangian(); }, theta, 1e-6);
    CHECK(rel_error(grad_lagrangian(theta, DualVector::scalar(mu), b, c), fd) <= 1e-4);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("soft parity penalties differentiate correctly") {
  for (Penalty p : {Penalty::demographic_parity, Penalty::equal_opportunity}) {
    const Batch b = testing::random_batch(40, 3, 77);
    const ParamVector theta = testing::generic_params(testing::small_arch(3), 3);
    const TaskObjective obj{p, 0.7, 0.0};
    const auto fd = finite_diff_grad(
        [&](const ParamVector& t) { return evaluate_objective(t, b, obj).lagrangian(); }, theta, 1e-6);
    CHECK(rel_error(objective_gradient(theta, b, obj), fd) <= 1e-5);
  }
}

TEST_CASE("gradient vanishes at the unconstrained optimum") {
  const ConvexToy toy = make_convex_toy(ToyParams{});
  const Gradient g = grad_lagrangian(toy.unconstrained, DualVector::scalar(0.0), toy.data, 0.01);
  CHECK(std::hypot(g[0], g[1]) <= 1e-6);
}

TEST_CASE("linear-model loss is convex along segments") {
  const Batch b = testing::random_batch(50, 3, 31);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const ParamVector t1(NetworkArch::linear(3), {rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    const ParamVector t2(NetworkArch::linear(3), {rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    const double lam = rng.uniform();
    ParamVector mix = ParamVector::zeros(NetworkArch::linear(3));
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] = lam * t1[j] + (1 - lam) * t2[j];
    CHECK(loss_ce(mix, b) <= lam * loss_ce(t1, b) + (1 - lam) * loss_ce(t2, b) + 1e-10);
  }
}

TEST_CASE("evaluation is pure") {
  const Batch b = testing::random_batch(25, 4, 3);
  const ParamVector theta = init_params(testing::small_arch(4), 2);
  const ParamVector copy = theta;
  const auto g1 = grad_lagrangian(theta, DualVector::scalar(0.3), b, 0.0);
  const auto g2 = grad_lagrangian(theta, DualVector::scalar(0.3), b, 0.0);
  CHECK(g1 == g2);
  CHECK(theta == copy);
  CHECK(loss_ce(theta, b) == loss_ce(theta, b));
}

TEST_CASE("type invariants are enforced") {
  CHECK_THROWS(DualVector({-0.1}));
  CHECK_THROWS_AS(ParamVector(NetworkArch::linear(2), {1.0}), DimensionError);
  Batch b(2);
  const double e[2] = {0, 0};
  CHECK_THROWS(b.add(e, 2, 0, 0));
  const double e3[3] = {0, 0, 0};
  b.add(e, 1, 0, 0);
  CHECK_THROWS_AS(b.add(e3, 1, 0, 1), DimensionError);
  CHECK_THROWS(grad_lagrangian(ParamVector::zeros(NetworkArch::linear(2)), DualVector({0.1, 0.2}), b, 0));
}
