#include "pdfm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "pdfm/fairness.hpp"

namespace pdfm {

std::vector<ToyParams> default_toy_suite() {
  std::vector<ToyParams> out;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    ToyParams p;
    p.seed = seed;
    out.push_back(p);
  }
  return out;
}

InnerConfig verify_inner_config() {
  InnerConfig cfg;
  cfg.alpha = 0.01;
  cfg.gamma = 0.01;
  cfg.q = 1;
  cfg.k_iters = 2000;
  cfg.penalty = Penalty::dbc;
  cfg.record_averages = true;
  return cfg;
}

double cauchy_worst(const std::vector<ParamVector>& averages,
                    const std::vector<double>& iterate_norms) {
  double m = 0.0;
  for (double v : iterate_norms) m = std::max(m, v);
  for (const auto& a : averages) m = std::max(m, a.norm());
  double worst = -INFINITY;
  // averages[j] holds the averaged iterate of step k = j + 1.
  for (std::size_t i = 0; i < averages.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    for (std::size_t j = i + 1; j < averages.size(); ++j) {
      const double kp = static_cast<double>(j + 1);
      const double lhs = distance2(averages[j].values(), averages[i].values());
      worst = std::max(worst, lhs - 2.0 * m * (kp - k) / (k + 1.0));
    }
  }
  return worst;
}

ToyVerdict verify_toy(const ConvexToy& toy, const InnerConfig& cfg_in, const VerifyTolerances& tol) {
  InnerConfig cfg = cfg_in;
  cfg.c = toy.c;
  cfg.record_averages = true;
  const InnerResult run = adapt(toy.unconstrained, DualVector::scalar(0.0), toy.data, cfg);
  const OracleResult oracle = oracle_solve_convex(toy.data, toy.c);

  ToyVerdict v;
  v.name = toy.name;
  v.oracle_f = oracle.f;
  const TaskObjective plain{Penalty::none, 0.0, toy.c};
  const ObjectiveValue fin = evaluate_objective(run.theta_averaged, toy.data, plain);
  v.solver_f = fin.loss;
  v.objective_gap = std::abs(fin.loss - oracle.f);
  v.violation = std::max(0.0, fin.constraint);
  v.gap_ok = oracle.feasible_found && v.objective_gap <= tol.objective_gap;
  v.violation_ok = v.violation <= tol.violation;

  std::vector<double> norms{toy.unconstrained.norm()};
  v.min_mu = INFINITY;
  for (const auto& r : run.trace) {
    norms.push_back(r.theta_norm);
    v.min_mu = std::min(v.min_mu, r.mu);
  }
  v.cauchy_worst = cauchy_worst(run.averages, norms);
  v.cauchy_ok = v.cauchy_worst <= tol.cauchy_slack;
  v.mu_ok = v.min_mu >= 0.0;

  // Dual side: exact q at every multiplier the run visited (mu^0 included).
  v.best_dual = exact_dual(toy.data, 0.0, toy.c);
  for (const auto& r : run.trace) v.best_dual = std::max(v.best_dual, exact_dual(toy.data, r.mu, toy.c));
  v.best_primal = INFINITY;
  for (std::size_t j = 0; j < run.averages.size(); ++j) {
    if (run.trace[j].constraint <= 0.0) v.best_primal = std::min(v.best_primal, run.trace[j].loss_avg);
  }
  if (oracle.feasible_found) v.best_primal = std::min(v.best_primal, oracle.f);
  v.duality_gap = v.best_primal - v.best_dual;
  v.weak_duality_min = v.duality_gap;
  v.duality_ok = std::isfinite(v.duality_gap) && v.duality_gap <= tol.duality_gap &&
                 v.weak_duality_min >= tol.weak_duality;
  return v;
}

bool VerifyReport::passed() const {
  return !toys.empty() && std::all_of(toys.begin(), toys.end(), [](const ToyVerdict& t) { return t.passed(); });
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  char buf[512];
  for (const auto& t : toys) {
    std::snprintf(buf, sizeof(buf),
                  "%s: gap=%.3e [%s] violation=%.3e [%s] cauchy_worst=%.3e [%s] min_mu=%.4f [%s] "
                  "duality_gap=%.3e weak_min=%.3e [%s]\n",
                  t.name.c_str(), t.objective_gap, t.gap_ok ? "ok" : "FAIL", t.violation,
                  t.violation_ok ? "ok" : "FAIL", t.cauchy_worst, t.cauchy_ok ? "ok" : "FAIL",
                  t.min_mu, t.mu_ok ? "ok" : "FAIL", t.duality_gap, t.weak_duality_min,
                  t.duality_ok ? "ok" : "FAIL");
    os << buf;
  }
  os << (passed() ? "verify: PASS\n" : "verify: FAIL\n");
  return os.str();
}

VerifyReport verify_inner_solver(const VerifyTolerances& tol) {
  VerifyReport rep;
  const InnerConfig cfg = verify_inner_config();
  for (const ToyParams& p : default_toy_suite()) rep.toys.push_back(verify_toy(make_convex_toy(p), cfg, tol));
  return rep;
}

}  // namespace pdfm
