#pragma once

#include <string>
#include <vector>

#include "pdfm/convex_oracle.hpp"
#include "pdfm/inner_solver.hpp"

namespace pdfm {

struct VerifyTolerances {
  double objective_gap = 1e-2;
  double violation = 1e-3;
  double cauchy_slack = 1e-9;
  double duality_gap = 0.05;
  double weak_duality = -1e-8;
};

struct ToyVerdict {
  std::string name;
  double oracle_f = 0.0;
  double solver_f = 0.0;
  double objective_gap = 0.0;
  double violation = 0.0;         // max(0, g) at the final averaged iterate
  double cauchy_worst = 0.0;      // max over pairs of lhs - rhs
  double min_mu = 0.0;
  double best_primal = 0.0;       // best f over feasible averaged iterates
  double best_dual = 0.0;         // max_k q(mu^k)
  double duality_gap = 0.0;
  double weak_duality_min = 0.0;  // min over feasible iterates of f - best_dual
  bool gap_ok = false;
  bool violation_ok = false;
  bool cauchy_ok = false;
  bool mu_ok = false;
  bool duality_ok = false;

  bool passed() const { return gap_ok && violation_ok && cauchy_ok && mu_ok && duality_ok; }
};

/// The default convex suite (several seeds of the toy family).
std::vector<ToyParams> default_toy_suite();
InnerConfig verify_inner_config();

/// Largest violation of ||avg^k' - avg^k|| <= 2M (k' - k) / (k + 1) over all
/// k < k' (negative when the bound holds everywhere). `iterate_norms` are the
/// raw iterate norms that enter M together with the averaged ones.
double cauchy_worst(const std::vector<ParamVector>& averages,
                    const std::vector<double>& iterate_norms);

ToyVerdict verify_toy(const ConvexToy& toy, const InnerConfig& cfg,
                      const VerifyTolerances& tol = {});

struct VerifyReport {
  std::vector<ToyVerdict> toys;
  bool passed() const;
  std::string text() const;
};

VerifyReport verify_inner_solver(const VerifyTolerances& tol = {});

}  // namespace pdfm
