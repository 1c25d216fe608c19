#include "pdfm/fairness.hpp"

#include <cmath>
#include <string>

#include "pdfm/kernels.hpp"
#include "pdfm/model.hpp"

namespace pdfm {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

void FairnessConfig::validate(std::size_t n) const {
  if (!(c >= 0.0)) throw std::invalid_argument("fairness: c must be >= 0");
  if (knn_k < 1) throw std::invalid_argument("fairness: knn_k must be >= 1");
  if (n > 0 && knn_k >= n) throw std::invalid_argument("fairness: knn_k must be < set size");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("fairness: threshold must lie in (0, 1)");
  }
}

double dbc(std::span<const double> distances, std::span<const int> s) {
  check_lengths(distances.size(), s.size(), "dbc");
  if (s.empty()) throw std::invalid_argument("dbc: empty input");
  const double h = static_cast<double>(s.size());
  double sbar = 0.0;
  for (int v : s) sbar += v;
  sbar /= h;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (s[i] - sbar) * distances[i];
  return acc / h;
}

double constraint_g(std::span<const double> distances, std::span<const int> s, double c) {
  return std::abs(dbc(distances, s)) - c;
}

double constraint_subgrad_sign(double dbc_value) {
  if (std::abs(dbc_value) <= kSignZero) return 0.0;
  return dbc_value > 0.0 ? 1.0 : -1.0;
}

std::vector<int> hard_predictions(std::span<const double> probs, double threshold) {
  std::vector<int> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_lengths(preds.size(), labels.size(), "accuracy");
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

double discrimination(std::span<const int> preds, std::span<const int> s) {
  check_lengths(preds.size(), s.size(), "discrimination");
  double pos[2] = {0.0, 0.0};
  double cnt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int g = s[i] != 0;
    pos[g] += preds[i];
    cnt[g] += 1.0;
  }
  if (cnt[0] == 0.0 || cnt[1] == 0.0) {
    throw UndefinedMetric("discrimination: one protected group is empty");
  }
  return std::abs(pos[1] / cnt[1] - pos[0] / cnt[0]);
}

double consistency(std::span<const int> preds, std::span<const std::size_t> neighbors,
                   std::size_t k) {
  check_lengths(neighbors.size(), preds.size() * k, "consistency");
  if (preds.empty()) throw std::invalid_argument("consistency: empty input");
  double disagree = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t r = 0; r < k; ++r) {
      disagree += std::abs(preds[i] - preds[neighbors[i * k + r]]);
    }
  }
  return 1.0 - disagree / (static_cast<double>(preds.size()) * static_cast<double>(k));
}

double consistency(std::span<const int> preds, const Matrix& features, std::size_t k) {
  check_lengths(preds.size(), features.rows(), "consistency");
  if (k < 1 || k >= preds.size()) throw std::invalid_argument("consistency: need 1 <= k < n");
  return consistency(preds, kernels::knn_parallel(features, k), k);
}

double r_dp(std::span<const double> probs, std::span<const int> s) {
  check_lengths(probs.size(), s.size(), "r_dp");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (s[i] == 0) {
      acc += probs[i];
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetric("r_dp: no s=0 examples");
  return 1.0 - acc / static_cast<double>(n);
}

double r_eop(std::span<const double> probs, std::span<const int> labels, std::span<const int> s) {
  check_lengths(probs.size(), s.size(), "r_eop");
  check_lengths(probs.size(), labels.size(), "r_eop");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (s[i] == 0 && labels[i] == 1) {
      acc += probs[i];
      ++n;
    }
  }
  if (n == 0) throw UndefinedMetric("r_eop: no s=0, y=1 examples");
  return 1.0 - acc / static_cast<double>(n);
}

double distance_ratio(std::span<const double> distances, std::span<const int> s) {
  check_lengths(distances.size(), s.size(), "distance_ratio");
  double sum[2] = {0.0, 0.0};
  double cnt[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int g = s[i] != 0;
    sum[g] += std::abs(distances[i]);
    cnt[g] += 1.0;
  }
  if (cnt[0] == 0.0 || cnt[1] == 0.0) {
    throw UndefinedMetric("distance_ratio: one protected group is empty");
  }
  return (sum[1] / cnt[1]) / (sum[0] / cnt[0]);
}

MetricsReport evaluate(std::span<const double> logits, std::span<const int> labels,
                       std::span<const int> s, const Matrix& knn_features,
                       const FairnessConfig& cfg) {
  cfg.validate(logits.size());
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = sigmoid(logits[i]);
  const auto preds = hard_predictions(probs, cfg.threshold);
  MetricsReport r;
  r.n = logits.size();
  r.accuracy = accuracy(preds, labels);
  r.dbc = dbc(logits, s);
  r.disc = discrimination(preds, s);
  r.cons = consistency(preds, knn_features, cfg.knn_k);
  return r;
}

}  // namespace pdfm
