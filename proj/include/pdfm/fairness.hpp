#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdfm/matrix.hpp"

namespace pdfm {

struct FairnessConfig {
  double c = 0.01;
  std::size_t knn_k = 5;
  double threshold = 0.5;

  /// Throws std::invalid_argument; `n` is the evaluation set size (0 skips the k check).
  void validate(std::size_t n = 0) const;
};

struct MetricsReport {
  double accuracy = 0.0;
  double dbc = 0.0;
  double disc = 0.0;
  double cons = 0.0;
  std::size_t n = 0;
};

/// Raised when a metric conditions on a group that has no members.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// (1/h) sum_i (s_i - mean(s)) d_i
double dbc(std::span<const double> distances, std::span<const int> s);

/// |dbc| - c
double constraint_g(std::span<const double> distances, std::span<const int> s, double c);

inline constexpr double kSignZero = 1e-12;
double constraint_subgrad_sign(double dbc_value);

std::vector<int> hard_predictions(std::span<const double> probs, double threshold = 0.5);

double accuracy(std::span<const int> preds, std::span<const int> labels);

/// |P(yhat=1 | s=1) - P(yhat=1 | s=0)|
double discrimination(std::span<const int> preds, std::span<const int> s);

/// 1 - (1/(n k)) sum_i sum_{j in kNN(i)} |yhat_i - yhat_j|
double consistency(std::span<const int> preds, const Matrix& features, std::size_t k);
/// Same, from a precomputed row-major n x k neighbor table.
double consistency(std::span<const int> preds, std::span<const std::size_t> neighbors,
                   std::size_t k);

/// 1 - mean prob over s=0, and over s=0 & y=1.
double r_dp(std::span<const double> probs, std::span<const int> s);
double r_eop(std::span<const double> probs, std::span<const int> labels, std::span<const int> s);

/// mean |d| over s=1 divided by mean |d| over s=0.
double distance_ratio(std::span<const double> distances, std::span<const int> s);

/// Full report from logits. `knn_features` are the rows consistency is
/// measured over (unprotected attributes), aligned with the other inputs.
MetricsReport evaluate(std::span<const double> logits, std::span<const int> labels,
                       std::span<const int> s, const Matrix& knn_features,
                       const FairnessConfig& cfg);

}  // namespace pdfm
