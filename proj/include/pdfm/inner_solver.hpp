#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "pdfm/model.hpp"

namespace pdfm {

struct InnerConfig {
  double alpha = 0.01;  // dual step
  double gamma = 0.01;  // primal step
  int q = 1;            // primal steps per dual iteration
  int k_iters = 10;
  double c = 0.01;
  /// Penalty weighted by mu in the primal steps. Penalty::none drops it
  /// (the dual is still updated from |DBC| - c unless alpha is 0).
  Penalty penalty = Penalty::dbc;
  /// Keep every averaged iterate in the result (memory k * |theta|).
  bool record_averages = false;

  void validate() const;
};

struct InnerTraceRecord {
  int k = 0;
  double loss = 0.0;          // f at the current iterate theta^k
  double loss_avg = 0.0;      // f at the averaged iterate
  double constraint = 0.0;    // g_k, at the averaged iterate
  double dual_estimate = 0.0; // L(theta^k, mu^{k-1}), the approximate dual value
  double mu = 0.0;            // mu^k after the projected step
  double theta_norm = 0.0;
  double avg_norm = 0.0;
};

struct InnerResult {
  ParamVector theta_adapted;
  DualVector mu_adapted;
  ParamVector theta_averaged;  // last averaged iterate
  std::vector<InnerTraceRecord> trace;
  std::vector<ParamVector> averages;  // filled when record_averages
  bool single_group = false;
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e3;

/// max(0, mu + alpha g) elementwise; alpha == 0 returns mu unchanged.
DualVector dual_step(const DualVector& mu, double alpha, const std::vector<double>& g);

/// Coordinatewise mean of a non-empty history.
ParamVector primal_average(const std::vector<ParamVector>& history);

/// Dual subgradient adaptation on one support set.
InnerResult adapt(const ParamVector& theta0, const DualVector& mu0, const Batch& support,
                  const InnerConfig& cfg);

/// One JSON object per dual iteration.
void write_trace_jsonl(std::ostream& os, const InnerResult& result);

}  // namespace pdfm
