#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pdfm/model.hpp"

namespace pdfm {

/// Two-feature logistic regression without bias under |DBC| <= c. With a
/// linear model DBC(theta) = a^T theta for a fixed vector a.
struct ToyParams {
  int n = 200;
  double rho = 0.5;      // s copies y with this probability, otherwise a fair coin
  double y_shift = 0.5;  // class offset along the first feature
  double s_shift = 0.5;  // group offset along the second feature
  double c_ratio = 0.8;  // c as a fraction of |DBC| at the unconstrained optimum
  std::uint64_t seed = 1;
};

struct ConvexToy {
  std::string name;
  Batch data;
  double c = 0.0;
  ParamVector unconstrained;  // minimizer of the loss alone
  std::vector<double> a;      // DBC(theta) = a^T theta
};

NetworkArch toy_arch();
ConvexToy make_convex_toy(const ToyParams& params);

/// a with DBC(theta) = a^T theta for a linear arch without bias.
std::vector<double> dbc_direction(const Batch& batch);

/// Newton's method on the (strictly convex) logistic loss.
ParamVector logistic_optimum(const Batch& batch, double tol = 1e-13, int max_iter = 100);

struct OracleResult {
  bool feasible_found = false;
  ParamVector theta;
  double f = std::numeric_limits<double>::quiet_NaN();
  double g = std::numeric_limits<double>::quiet_NaN();
};

/// Brute force over theta in [lo, hi]^2 on a grid x grid lattice, keeping the
/// best feasible point, then repeated local zooms until the cell width is
/// below `tol`. Independent of any gradient code.
OracleResult oracle_solve_convex(const Batch& batch, double c, int grid = 2001, double lo = -5.0,
                                 double hi = 5.0, double tol = 1e-4);

/// q(mu) = min_theta f(theta) + mu (|a^T theta| - c), computed by a golden
/// section search over t = a^T theta with an exact 1-D minimization along
/// the orthogonal direction.
double exact_dual(const Batch& batch, double mu, double c);

}  // namespace pdfm
