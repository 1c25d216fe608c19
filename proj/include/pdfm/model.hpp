#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdfm/matrix.hpp"

namespace pdfm {

/// Layer geometry inside the flat parameter vector: W (out x in, row-major)
/// followed by b (out) when biases are enabled.
struct LayerShape {
  int in = 0;
  int out = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;
};

/// Feed-forward binary classifier: ReLU hidden layers, one sigmoid output unit.
/// An empty `hidden_dims` gives the linear model logit = w^T e (+ b).
struct NetworkArch {
  int input_dim = 0;
  std::vector<int> hidden_dims{40, 40};
  bool bias = true;

  static NetworkArch linear(int input_dim, bool bias = true) { return {input_dim, {}, bias}; }

  std::vector<LayerShape> layers() const;
  std::size_t param_count() const;
  bool is_linear() const { return hidden_dims.empty(); }
  void validate() const;
  std::string describe() const;

  bool operator==(const NetworkArch&) const = default;
};

/// Flat vector of all network weights together with the architecture it
/// parameterizes.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(NetworkArch arch, std::vector<double> values);
  static ParamVector zeros(const NetworkArch& arch);

  const NetworkArch& arch() const { return arch_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const;
  double norm() const { return norm2(values_); }

  bool operator==(const ParamVector&) const = default;

 private:
  NetworkArch arch_;
  std::vector<double> values_;
};

using Gradient = std::vector<double>;

/// Nonnegative Lagrange multipliers; one entry per constraint.
class DualVector {
 public:
  DualVector() = default;
  explicit DualVector(std::vector<double> values);
  static DualVector scalar(double mu) { return DualVector(std::vector<double>{mu}); }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const DualVector&) const = default;

 private:
  std::vector<double> values_;
};

struct Example {
  std::vector<double> e;
  int y = 0;
  int s = 0;
};

/// Columnar batch of examples. Feature rows are the model inputs; row ids
/// identify the source rows of a dataset (used for disjointness checks).
class Batch {
 public:
  Batch() = default;
  explicit Batch(std::size_t feature_dim) : features_(0, feature_dim) {}
  explicit Batch(const std::vector<Example>& examples);

  void add(std::span<const double> e, int y, int s, std::size_t row_id);

  std::size_t size() const { return y_.size(); }
  bool empty() const { return y_.empty(); }
  std::size_t feature_dim() const { return features_.cols(); }

  const Matrix& features() const { return features_; }
  std::span<const double> features(std::size_t i) const { return features_.row(i); }
  std::span<const int> labels() const { return y_; }
  std::span<const int> groups() const { return s_; }
  std::span<const std::size_t> row_ids() const { return row_ids_; }
  int y(std::size_t i) const { return y_[i]; }
  int s(std::size_t i) const { return s_[i]; }

  bool has_both_groups() const;

 private:
  Matrix features_;
  std::vector<int> y_;
  std::vector<int> s_;
  std::vector<std::size_t> row_ids_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
ParamVector init_params(const NetworkArch& arch, std::uint64_t seed);

struct Output {
  double logit = 0.0;
  double prob = 0.5;
};

double sigmoid(double z);
Output forward(const ParamVector& theta, std::span<const double> e);
/// Pre-sigmoid outputs for every row; the logit serves as the signed distance
/// to the decision boundary.
std::vector<double> logits(const ParamVector& theta, const Batch& batch);

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy with probabilities clamped to [1e-12, 1-1e-12].
double loss_ce(const ParamVector& theta, const Batch& batch);

/// Penalty attached to the task loss. `dbc` is the constraint |DBC| - c,
/// the other two are the soft demographic-parity / equal-opportunity
/// regularizers used by the fixed-multiplier baselines.
enum class Penalty { none, dbc, demographic_parity, equal_opportunity };

struct TaskObjective {
  Penalty penalty = Penalty::none;
  double weight = 0.0;  // mu or lambda
  double c = 0.0;       // relaxation for Penalty::dbc
};

struct ObjectiveValue {
  double loss = 0.0;        // mean cross-entropy
  double constraint = 0.0;  // |DBC| - c for dbc/none, R_dp / R_eop otherwise
  double dbc = 0.0;         // signed DBC of the logits
  bool degenerate = false;  // conditioning group missing; penalty contributes 0
  double weight = 0.0;

  /// loss + weight * constraint (penalty dropped when the weight is zero).
  double lagrangian() const;
};

ObjectiveValue evaluate_objective(const ParamVector& theta, const Batch& batch,
                                  const TaskObjective& objective);

/// Gradient of loss_ce + weight * penalty. For Penalty::dbc this is a
/// subgradient (sign(DBC) chain factor, 0 at the kink).
Gradient objective_gradient(const ParamVector& theta, const Batch& batch,
                            const TaskObjective& objective, bool* degenerate = nullptr);

Gradient grad_loss_ce(const ParamVector& theta, const Batch& batch);

/// Subgradient of f_t(theta) + mu^T g_t(theta) with g_t = |DBC| - c.
Gradient grad_lagrangian(const ParamVector& theta, const DualVector& mu, const Batch& batch,
                         double c);

/// Central differences, one coordinate at a time.
Gradient finite_diff_grad(const std::function<double(const ParamVector&)>& fn,
                          const ParamVector& theta, double h);

}  // namespace pdfm
