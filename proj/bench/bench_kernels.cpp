// Serial vs OpenMP timings for the hot kernels. Prints one line per kernel
// and size with the best-of-N wall time and the resulting speedup.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include <omp.h>

#include "pdfm/kernels.hpp"
#include "pdfm/rng.hpp"

using namespace pdfm;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

void report(const char* kernel, std::size_t n, double serial, double parallel, bool same) {
  std::printf("%-10s n=%-7zu serial=%10.3f ms  openmp=%10.3f ms  speedup=%5.2fx  identical=%s\n", kernel, n,
              serial * 1e3, parallel * 1e3, serial / parallel, same ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  int reps = 5;
  std::vector<std::size_t> sizes{1024, 16384, 131072};
  std::size_t knn_n = 4096;
  app.add_option("--reps", reps, "repetitions per measurement (best is kept)");
  app.add_option("--sizes", sizes, "row counts for logits/backprop")->delimiter(',');
  app.add_option("--knn-n", knn_n, "row count for knn");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads=%d\n", omp_get_max_threads());
  NetworkArch arch;
  arch.input_dim = 13;
  const ParamVector theta = init_params(arch, 1);
  for (std::size_t n : sizes) {
    const Matrix x = random_matrix(n, 13, n);
    std::vector<double> a(n);
    std::vector<double> b(n);
    const double ts = best_of(reps, [&] { kernels::logits_serial(theta, x, a); });
    const double tp = best_of(reps, [&] { kernels::logits_parallel(theta, x, b); });
    report("logits", n, ts, tp, a == b);

    std::vector<double> coeff(n);
    Rng rng(7);
    for (auto& c : coeff) c = rng.normal() / static_cast<double>(n);
    std::vector<double> ga(theta.size());
    std::vector<double> gb(theta.size());
    const double bs = best_of(reps, [&] {
      std::fill(ga.begin(), ga.end(), 0.0);
      kernels::backprop_serial(theta, x, coeff, ga);
    });
    const double bp = best_of(reps, [&] {
      std::fill(gb.begin(), gb.end(), 0.0);
      kernels::backprop_parallel(theta, x, coeff, gb);
    });
    // The serial reference sums rows in one pass, the parallel one in chunks,
    // so agreement is up to rounding.
    double diff = 0.0;
    for (std::size_t i = 0; i < ga.size(); ++i) diff = std::max(diff, std::abs(ga[i] - gb[i]));
    report("backprop", n, bs, bp, diff <= 1e-12);
  }

  const Matrix x = random_matrix(knn_n, 12, 99);
  std::vector<std::size_t> ka;
  std::vector<std::size_t> kb;
  const double ks = best_of(std::max(1, reps / 2), [&] { ka = kernels::knn_serial(x, 5); });
  const double kp = best_of(std::max(1, reps / 2), [&] { kb = kernels::knn_parallel(x, 5); });
  report("knn", knn_n, ks, kp, ka == kb);
  return 0;
}
