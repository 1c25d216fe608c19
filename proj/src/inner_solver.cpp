#include "pdfm/inner_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "pdfm/fairness.hpp"

namespace pdfm {

void InnerConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("inner: alpha must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("inner: gamma must be > 0");
  if (q < 1) throw std::invalid_argument("inner: q must be >= 1");
  if (k_iters < 0) throw std::invalid_argument("inner: k_iters must be >= 0");
  if (!(c >= 0.0)) throw std::invalid_argument("inner: c must be >= 0");
}

DualVector dual_step(const DualVector& mu, double alpha, const std::vector<double>& g) {
  if (g.size() != mu.size()) throw DimensionError("dual_step: size mismatch");
  if (alpha == 0.0) return mu;
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, mu[i] + alpha * g[i]);
  return DualVector(std::move(out));
}

ParamVector primal_average(const std::vector<ParamVector>& history) {
  if (history.empty()) throw std::invalid_argument("primal_average: empty history");
  ParamVector out = ParamVector::zeros(history.front().arch());
  for (const ParamVector& p : history) {
    if (p.size() != out.size()) throw DimensionError("primal_average: size mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(history.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  return out;
}

InnerResult adapt(const ParamVector& theta0, const DualVector& mu0, const Batch& support,
                  const InnerConfig& cfg) {
  cfg.validate();
  if (support.empty()) throw std::invalid_argument("adapt: empty support set");
  if (mu0.size() != 1) throw DimensionError("adapt: expected one multiplier");

  InnerResult res;
  res.single_group = !support.has_both_groups();
  res.trace.reserve(static_cast<std::size_t>(cfg.k_iters));

  ParamVector theta = theta0;
  DualVector mu = mu0;
  // Running sum of theta^0..theta^{k-1}; the average at step k excludes theta^k.
  std::vector<double> sum(theta0.values().begin(), theta0.values().end());
  ParamVector avg = theta0;

  const TaskObjective measure{Penalty::none, 0.0, cfg.c};
  for (int k = 1; k <= cfg.k_iters; ++k) {
    const TaskObjective primal{cfg.penalty, mu[0], cfg.c};
    for (int j = 0; j < cfg.q; ++j) {
      const Gradient g = objective_gradient(theta, support, primal);
      auto v = theta.values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= cfg.gamma * g[i];
    }
    const double inv_k = 1.0 / static_cast<double>(k);
    auto av = avg.values();
    for (std::size_t i = 0; i < av.size(); ++i) av[i] = sum[i] * inv_k;
    const auto tv = theta.values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += tv[i];

    const ObjectiveValue at_theta = evaluate_objective(theta, support, primal);
    const ObjectiveValue at_avg = evaluate_objective(avg, support, measure);
    const double g_k = at_avg.constraint;
    mu = dual_step(mu, cfg.alpha, {g_k});

    InnerTraceRecord rec;
    rec.k = k;
    rec.loss = at_theta.loss;
    rec.loss_avg = at_avg.loss;
    rec.constraint = g_k;
    rec.dual_estimate = at_theta.lagrangian();
    rec.mu = mu[0];
    rec.theta_norm = theta.norm();
    rec.avg_norm = avg.norm();
    res.trace.push_back(rec);
    if (cfg.record_averages) res.averages.push_back(avg);
    if (!(rec.theta_norm <= kDivergenceNorm)) res.diverged = true;
  }
  res.theta_adapted = std::move(theta);
  res.mu_adapted = std::move(mu);
  res.theta_averaged = std::move(avg);
  return res;
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void write_trace_jsonl(std::ostream& os, const InnerResult& result) {
  for (const InnerTraceRecord& r : result.trace) {
    nlohmann::ordered_json j;
    j["k"] = r.k;
    j["loss"] = finite_or_null(r.loss);
    j["loss_avg"] = finite_or_null(r.loss_avg);
    j["constraint"] = finite_or_null(r.constraint);
    j["dual_estimate"] = finite_or_null(r.dual_estimate);
    j["mu"] = finite_or_null(r.mu);
    j["theta_norm"] = finite_or_null(r.theta_norm);
    j["avg_norm"] = finite_or_null(r.avg_norm);
    j["single_group"] = result.single_group;
    os << j.dump() << '\n';
  }
}

}  // namespace pdfm
