#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "pdfm/convex_oracle.hpp"
#include "pdfm/inner_solver.hpp"
#include "pdfm/verify.hpp"

using namespace pdfm;

TEST_CASE("dual step") {
  CHECK(dual_step(DualVector::scalar(0.5), 0.1, {-10.0})[0] == 0.0);
  CHECK(dual_step(DualVector::scalar(0.2), 0.1, {0.3})[0] == doctest::Approx(0.23));
  CHECK(dual_step(DualVector::scalar(0.2), 0.1, {0.0})[0] == 0.2);
  // alpha = 0 freezes the dual even against an infinite constraint value.
  CHECK(dual_step(DualVector::scalar(0.2), 0.0, {-INFINITY})[0] == 0.2);
  CHECK_THROWS(dual_step(DualVector::scalar(0.2), 0.1, {0.0, 1.0}));
}

TEST_CASE("primal average") {
  const NetworkArch a = NetworkArch::linear(1, false);
  CHECK(primal_average({ParamVector(a, {2.0})}) == ParamVector(a, {2.0}));
  CHECK(primal_average({ParamVector(a, {2.0}), ParamVector(a, {4.0})})[0] == 3.0);
  const ParamVector star(NetworkArch::linear(2), {0.25, -1.5, 3.0});
  CHECK(primal_average({star, star, star, star}) == star);
  CHECK_THROWS(primal_average({}));
}

TEST_CASE("adapt records one trace entry per dual iteration") {
  const Batch b = testing::random_batch(20, 3, 1);
  const ParamVector theta = init_params(testing::small_arch(3), 1);
  InnerConfig cfg;
  cfg.k_iters = 7;
  const InnerResult r = adapt(theta, DualVector::scalar(0.1), b, cfg);
  CHECK(r.trace.size() == 7);
  CHECK(r.theta_adapted.size() == theta.size());
  CHECK_FALSE(r.single_group);
  CHECK_FALSE(r.diverged);
  for (const auto& t : r.trace) CHECK(t.mu >= 0.0);

  std::ostringstream os;
  write_trace_jsonl(os, r);
  std::istringstream in(os.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("k").get<int>() == n + 1);
    CHECK(j.contains("dual_estimate"));
    ++n;
  }
  CHECK(n == 7);
}

TEST_CASE("strictly feasible constraint drives the dual to zero") {
  const Batch b = testing::random_batch(30, 2, 2);
  const ParamVector theta = init_params(testing::small_arch(2), 2);
  InnerConfig cfg;
  cfg.c = 5.0;
  cfg.alpha = 0.01;
  cfg.k_iters = 200;
  const double mu0 = 0.2;
  const InnerResult r = adapt(theta, DualVector::scalar(mu0), b, cfg);
  // Every g_k lies in [-5, -5 + |DBC|]; the slowest possible decay bounds the hitting time.
  double min_abs_g = INFINITY;
  for (const auto& t : r.trace) {
    CHECK(t.constraint < 0.0);
    min_abs_g = std::min(min_abs_g, std::abs(t.constraint));
  }
  const auto hit = static_cast<std::size_t>(std::ceil(mu0 / (cfg.alpha * min_abs_g)));
  REQUIRE(hit < r.trace.size());
  CHECK(r.trace[hit - 1].mu == 0.0);
  for (std::size_t k = hit; k < r.trace.size(); ++k) CHECK(r.trace[k].mu == 0.0);
  CHECK(r.mu_adapted[0] == 0.0);
}

TEST_CASE("adapt is deterministic") {
  const Batch b = testing::random_batch(40, 4, 3);
  const ParamVector theta = init_params(testing::small_arch(4), 3);
  InnerConfig cfg;
  cfg.k_iters = 25;
  const InnerResult a = adapt(theta, DualVector::scalar(0.3), b, cfg);
  const InnerResult c = adapt(theta, DualVector::scalar(0.3), b, cfg);
  CHECK(a.theta_adapted == c.theta_adapted);
  CHECK(a.mu_adapted == c.mu_adapted);
  CHECK(a.theta_averaged == c.theta_averaged);
}

TEST_CASE("frozen dual at zero reduces to plain gradient descent") {
  const Batch b = testing::random_batch(40, 3, 4);
  const ParamVector theta = init_params(testing::small_arch(3), 4);
  InnerConfig cfg;
  cfg.alpha = 0.0;
  cfg.k_iters = 30;
  cfg.q = 2;
  const InnerResult r = adapt(theta, DualVector::scalar(0.0), b, cfg);
  ParamVector gd = theta;
  for (int i = 0; i < cfg.k_iters * cfg.q; ++i) {
    const Gradient g = grad_loss_ce(gd, b);
    for (std::size_t j = 0; j < gd.size(); ++j) gd[j] -= cfg.gamma * g[j];
  }
  CHECK(r.theta_adapted == gd);
  CHECK(r.mu_adapted[0] == 0.0);
}

TEST_CASE("single protected group is flagged and the constraint is -c") {
  Batch b(2);
  Rng rng(1);
  for (std::size_t i = 0; i < 10; ++i) {
    const double e[2] = {rng.normal(), rng.normal()};
    b.add(e, static_cast<int>(i % 2), 1, i);
  }
  InnerConfig cfg;
  cfg.k_iters = 3;
  const InnerResult r = adapt(init_params(testing::small_arch(2), 1), DualVector::scalar(0.1), b, cfg);
  CHECK(r.single_group);
  for (const auto& t : r.trace) CHECK(t.constraint == doctest::Approx(-cfg.c));
}

TEST_CASE("divergence is flagged") {
  const Batch b = testing::random_batch(20, 2, 5);
  InnerConfig cfg;
  cfg.gamma = 1e5;
  cfg.k_iters = 5;
  const InnerResult r = adapt(ParamVector::zeros(NetworkArch::linear(2)), DualVector::scalar(0.0), b, cfg);
  CHECK(r.diverged);
}

TEST_CASE("averaged iterates satisfy the Cauchy bound on a network run") {
  const Batch b = testing::random_batch(30, 3, 6);
  InnerConfig cfg;
  cfg.k_iters = 60;
  cfg.record_averages = true;
  const ParamVector theta = init_params(testing::small_arch(3), 6);
  const InnerResult r = adapt(theta, DualVector::scalar(0.5), b, cfg);
  std::vector<double> norms{theta.norm()};
  for (const auto& t : r.trace) norms.push_back(t.theta_norm);
  CHECK(r.averages.size() == 60);
  CHECK(cauchy_worst(r.averages, norms) <= 1e-9);
}

TEST_CASE("longer runs do not increase violation on the convex toy") {
  const ConvexToy toy = make_convex_toy(ToyParams{});
  InnerConfig cfg = verify_inner_config();
  cfg.c = toy.c;
  cfg.record_averages = false;
  auto violation = [&](int k) {
    cfg.k_iters = k;
    const InnerResult r = adapt(toy.unconstrained, DualVector::scalar(0.0), toy.data, cfg);
    return std::max(0.0, r.trace.back().constraint);
  };
  for (int k : {250, 500, 1000}) CHECK(violation(2 * k) <= violation(k) + 1e-3);
}

TEST_CASE("invalid configuration is rejected") {
  const Batch b = testing::random_batch(10, 2, 1);
  InnerConfig cfg;
  cfg.gamma = 0.0;
  CHECK_THROWS(adapt(ParamVector::zeros(NetworkArch::linear(2)), DualVector::scalar(0.0), b, cfg));
  cfg = InnerConfig{};
  CHECK_THROWS(adapt(ParamVector::zeros(NetworkArch::linear(2)), DualVector::scalar(0.0), Batch(2), cfg));
}
