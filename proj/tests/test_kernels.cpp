#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pdfm/kernels.hpp"

using namespace pdfm;

namespace {

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("parallel logits equal the serial reference exactly") {
  const Batch b = testing::random_batch(300, 6, 11);
  NetworkArch arch;
  arch.input_dim = 6;
  const ParamVector theta = init_params(arch, 3);
  std::vector<double> s(b.size());
  std::vector<double> p(b.size());
  kernels::logits_serial(theta, b.features(), s);
  kernels::logits_parallel(theta, b.features(), p);
  CHECK(s == p);
}

TEST_CASE("parallel backprop matches the serial reference") {
  NetworkArch arch;
  arch.input_dim = 6;
  const ParamVector theta = init_params(arch, 4);
  for (std::size_t n : {1u, 17u, 64u, 65u, 500u}) {
    const Batch b = testing::random_batch(n, 6, 100 + n);
    std::vector<double> coeff(n);
    Rng rng(n);
    for (auto& c : coeff) c = rng.normal();
    std::vector<double> gs(theta.size(), 0.0);
    std::vector<double> gp(theta.size(), 0.0);
    kernels::backprop_serial(theta, b.features(), coeff, gs);
    kernels::backprop_parallel(theta, b.features(), coeff, gp);
    if (n <= kernels::kRowChunk) {
      CHECK(gs == gp);
    } else {
      CHECK(max_rel(gs, gp) < 1e-12);
    }
  }
}

TEST_CASE("backprop of a linear model is the coefficient-weighted feature sum") {
  const Batch b = testing::random_batch(10, 3, 2);
  const ParamVector theta(NetworkArch::linear(3, false), {0.1, -0.2, 0.3});
  std::vector<double> coeff(10, 0.5);
  std::vector<double> g(3, 0.0);
  kernels::backprop_serial(theta, b.features(), coeff, g);
  for (std::size_t j = 0; j < 3; ++j) {
    double want = 0.0;
    for (std::size_t i = 0; i < 10; ++i) want += 0.5 * b.features(i)[j];
    CHECK(g[j] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("knn excludes the point itself and breaks ties by index") {
  Matrix x(0, 1);
  for (double v : {0.0, 1.0, -1.0, 5.0}) {
    const double r[1] = {v};
    x.push_row(r);
  }
  const auto nb = kernels::knn_serial(x, 2);
  // Point 0 has neighbors 1 and 2 at distance 1; lower index first.
  CHECK(nb[0] == 1);
  CHECK(nb[1] == 2);
  CHECK(nb[2 * 3] == 1);
  CHECK(nb[2 * 3 + 1] == 0);
  CHECK(kernels::knn_parallel(x, 2) == nb);
  CHECK_THROWS(kernels::knn_serial(x, 4));
}

TEST_CASE("parallel knn matches serial on random points") {
  const Batch b = testing::random_batch(400, 4, 9);
  CHECK(kernels::knn_parallel(b.features(), 5) == kernels::knn_serial(b.features(), 5));
}

TEST_CASE("kernels reject width mismatch") {
  const Batch b = testing::random_batch(5, 3, 1);
  const ParamVector theta = ParamVector::zeros(NetworkArch::linear(4));
  std::vector<double> out(5);
  CHECK_THROWS_AS(kernels::logits_serial(theta, b.features(), out), DimensionError);
}
