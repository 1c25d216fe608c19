#include "pdfm/convex_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdfm/fairness.hpp"
#include "pdfm/rng.hpp"

namespace pdfm {
namespace {

// Loss of a 2-feature linear model without touching the network code.
double toy_loss(const Batch& b, double t0, double t1) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto e = b.features(i);
    const double z = e[0] * t0 + e[1] * t1;
    // log(1 + exp(-|z|)) form, then clamp as the model does.
    double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    acc -= b.y(i) ? std::log(p) : std::log(1.0 - p);
  }
  return acc / static_cast<double>(b.size());
}

void require_toy(const Batch& b) {
  if (b.feature_dim() != 2) throw DimensionError("convex oracle: expects 2 features");
  if (b.empty()) throw std::invalid_argument("convex oracle: empty batch");
}

}  // namespace

NetworkArch toy_arch() { return NetworkArch::linear(2, false); }

std::vector<double> dbc_direction(const Batch& batch) {
  const std::size_t d = batch.feature_dim();
  std::vector<double> a(d, 0.0);
  const double h = static_cast<double>(batch.size());
  double sbar = 0.0;
  for (int s : batch.groups()) sbar += s;
  sbar /= h;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto e = batch.features(i);
    for (std::size_t j = 0; j < d; ++j) a[j] += (batch.s(i) - sbar) * e[j];
  }
  for (auto& v : a) v /= h;
  return a;
}

ParamVector logistic_optimum(const Batch& batch, double tol, int max_iter) {
  require_toy(batch);
  double t[2] = {0.0, 0.0};
  const double h = static_cast<double>(batch.size());
  for (int it = 0; it < max_iter; ++it) {
    double g[2] = {0.0, 0.0};
    double H[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto e = batch.features(i);
      const double p = sigmoid(e[0] * t[0] + e[1] * t[1]);
      const double r = p - batch.y(i);
      const double w = p * (1.0 - p);
      g[0] += r * e[0] / h;
      g[1] += r * e[1] / h;
      H[0] += w * e[0] * e[0] / h;
      H[1] += w * e[0] * e[1] / h;
      H[2] += w * e[1] * e[1] / h;
    }
    const double det = H[0] * H[2] - H[1] * H[1];
    if (!(det > 0.0)) throw std::runtime_error("logistic_optimum: singular Hessian");
    const double d0 = (H[2] * g[0] - H[1] * g[1]) / det;
    const double d1 = (H[0] * g[1] - H[1] * g[0]) / det;
    t[0] -= d0;
    t[1] -= d1;
    if (std::hypot(g[0], g[1]) < tol) break;
  }
  return ParamVector(toy_arch(), {t[0], t[1]});
}

ConvexToy make_convex_toy(const ToyParams& p) {
  Rng rng(p.seed);
  ConvexToy toy;
  toy.data = Batch(2);
  for (int i = 0; i < p.n; ++i) {
    const int y = rng.uniform() < 0.5 ? 1 : 0;
    const int s = rng.uniform() < p.rho ? y : (rng.uniform() < 0.5 ? 1 : 0);
    const double e[2] = {(2 * y - 1) * p.y_shift + rng.normal(),
                         (2 * s - 1) * p.s_shift + rng.normal()};
    toy.data.add(e, y, s, static_cast<std::size_t>(i));
  }
  toy.unconstrained = logistic_optimum(toy.data);
  toy.a = dbc_direction(toy.data);
  toy.c = p.c_ratio * std::abs(dot(toy.a, toy.unconstrained.values()));
  toy.name = "toy-seed" + std::to_string(p.seed);
  return toy;
}

OracleResult oracle_solve_convex(const Batch& batch, double c, int grid, double lo, double hi,
                                 double tol) {
  require_toy(batch);
  if (grid < 2) throw std::invalid_argument("oracle: grid must be >= 2");
  const auto a = dbc_direction(batch);
  auto g_of = [&](double t0, double t1) { return std::abs(a[0] * t0 + a[1] * t1) - c; };

  // Coarse pass: every lattice point, feasibility first, ties to the lower index.
  const auto n = static_cast<std::ptrdiff_t>(grid);
  const double step = (hi - lo) / static_cast<double>(grid - 1);
  std::vector<double> best_f(static_cast<std::size_t>(grid), INFINITY);
  std::vector<std::ptrdiff_t> best_j(static_cast<std::size_t>(grid), -1);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double t0 = lo + step * static_cast<double>(i);
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const double t1 = lo + step * static_cast<double>(j);
      if (g_of(t0, t1) > 0.0) continue;
      const double f = toy_loss(batch, t0, t1);
      if (f < best_f[static_cast<std::size_t>(i)]) {
        best_f[static_cast<std::size_t>(i)] = f;
        best_j[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  OracleResult res;
  double bf = INFINITY;
  double b0 = 0.0;
  double b1 = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (best_j[static_cast<std::size_t>(i)] >= 0 && best_f[static_cast<std::size_t>(i)] < bf) {
      bf = best_f[static_cast<std::size_t>(i)];
      b0 = lo + step * static_cast<double>(i);
      b1 = lo + step * static_cast<double>(best_j[static_cast<std::size_t>(i)]);
    }
  }
  if (!std::isfinite(bf)) return res;

  // Zoom: a 41 x 41 lattice spanning two coarse cells each way, shrunk by 10 per pass.
  double half = 2.0 * step;
  while (half > tol) {
    const int m = 41;
    const double h = 2.0 * half / (m - 1);
    double nf = bf;
    double n0 = b0;
    double n1 = b1;
    for (int i = 0; i < m; ++i) {
      const double t0 = b0 - half + h * i;
      for (int j = 0; j < m; ++j) {
        const double t1 = b1 - half + h * j;
        if (g_of(t0, t1) > 0.0) continue;
        const double f = toy_loss(batch, t0, t1);
        if (f < nf) {
          nf = f;
          n0 = t0;
          n1 = t1;
        }
      }
    }
    bf = nf;
    b0 = n0;
    b1 = n1;
    half /= 10.0;
  }
  res.feasible_found = true;
  res.theta = ParamVector(toy_arch(), {b0, b1});
  res.f = bf;
  res.g = g_of(b0, b1);
  return res;
}

double exact_dual(const Batch& batch, double mu, double c) {
  require_toy(batch);
  if (!(mu >= 0.0)) throw std::invalid_argument("exact_dual: mu must be >= 0");
  const auto a = dbc_direction(batch);
  const double aa = a[0] * a[0] + a[1] * a[1];
  const double an = std::sqrt(aa);
  const double perp[2] = {-a[1] / an, a[0] / an};
  const double h = static_cast<double>(batch.size());

  // phi(t) = min over u of f(t a / |a|^2 + u perp), by damped Newton on u.
  double u_warm = 0.0;
  auto phi = [&](double t) {
    const double base[2] = {t * a[0] / aa, t * a[1] / aa};
    double u = u_warm;
    for (int it = 0; it < 100; ++it) {
      double g = 0.0;
      double H = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto e = batch.features(i);
        const double ep = e[0] * perp[0] + e[1] * perp[1];
        const double p = sigmoid(e[0] * base[0] + e[1] * base[1] + u * ep);
        g += (p - batch.y(i)) * ep / h;
        H += p * (1.0 - p) * ep * ep / h;
      }
      if (!(H > 0.0)) break;
      const double step = g / H;
      u -= step;
      if (std::abs(step) < 1e-13 * (1.0 + std::abs(u))) break;
    }
    u_warm = u;
    return toy_loss(batch, base[0] + u * perp[0], base[1] + u * perp[1]);
  };

  // The minimizer of phi(t) + mu |t| lies between 0 and the unconstrained t.
  const ParamVector opt = logistic_optimum(batch);
  const double t_opt = a[0] * opt[0] + a[1] * opt[1];
  double lo = std::min(0.0, t_opt);
  double hi = std::max(0.0, t_opt);
  auto obj = [&](double t) { return phi(t) + mu * std::abs(t); };
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  double f1 = obj(x1);
  double f2 = obj(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(t_opt)); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = obj(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = obj(x2);
    }
  }
  const double best = std::min({f1, f2, obj(0.0), obj(t_opt)});
  return best - mu * c;
}

}  // namespace pdfm
