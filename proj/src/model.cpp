#include "pdfm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdfm/fairness.hpp"
#include "pdfm/kernels.hpp"
#include "pdfm/rng.hpp"

namespace pdfm {

std::vector<LayerShape> NetworkArch::layers() const {
  std::vector<LayerShape> out;
  std::size_t offset = 0;
  int in = input_dim;
  auto push = [&](int n_out) {
    LayerShape ls{in, n_out, offset, 0};
    offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(n_out);
    ls.b_offset = offset;
    if (bias) offset += static_cast<std::size_t>(n_out);
    out.push_back(ls);
    in = n_out;
  };
  for (int h : hidden_dims) push(h);
  push(1);
  return out;
}

std::size_t NetworkArch::param_count() const {
  const auto ls = layers();
  const LayerShape& last = ls.back();
  return last.b_offset + (bias ? 1 : 0);
}

void NetworkArch::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("arch: input_dim must be positive");
  for (int h : hidden_dims) {
    if (h <= 0) throw std::invalid_argument("arch: hidden sizes must be positive");
  }
}

std::string NetworkArch::describe() const {
  std::ostringstream os;
  os << input_dim;
  for (int h : hidden_dims) os << '-' << h;
  os << "-1" << (bias ? "" : " (no bias)");
  return os.str();
}

ParamVector::ParamVector(NetworkArch arch, std::vector<double> values)
    : arch_(std::move(arch)), values_(std::move(values)) {
  arch_.validate();
  if (values_.size() != arch_.param_count()) {
    throw DimensionError("ParamVector: expected " + std::to_string(arch_.param_count()) +
                         " values, got " + std::to_string(values_.size()));
  }
}

ParamVector ParamVector::zeros(const NetworkArch& arch) {
  return ParamVector(arch, std::vector<double>(arch.param_count(), 0.0));
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DualVector::DualVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0)) throw std::invalid_argument("DualVector: entries must be >= 0");
  }
}

Batch::Batch(const std::vector<Example>& examples) {
  if (examples.empty()) return;
  features_ = Matrix(0, examples.front().e.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    add(examples[i].e, examples[i].y, examples[i].s, i);
  }
}

void Batch::add(std::span<const double> e, int y, int s, std::size_t row_id) {
  if ((y != 0 && y != 1) || (s != 0 && s != 1)) {
    throw std::invalid_argument("Batch: y and s must be 0 or 1");
  }
  if (!y_.empty() && e.size() != features_.cols()) {
    throw DimensionError("Batch: feature width mismatch");
  }
  if (y_.empty() && features_.cols() != e.size()) features_ = Matrix(0, e.size());
  features_.push_row(e);
  y_.push_back(y);
  s_.push_back(s);
  row_ids_.push_back(row_id);
}

bool Batch::has_both_groups() const {
  bool zero = false;
  bool one = false;
  for (int v : s_) (v ? one : zero) = true;
  return zero && one;
}

ParamVector init_params(const NetworkArch& arch, std::uint64_t seed) {
  arch.validate();
  ParamVector theta = ParamVector::zeros(arch);
  Rng rng(seed);
  for (const LayerShape& ls : arch.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(ls.in + ls.out));
    const std::size_t n = static_cast<std::size_t>(ls.in) * static_cast<std::size_t>(ls.out);
    for (std::size_t i = 0; i < n; ++i) theta[ls.w_offset + i] = rng.uniform(-bound, bound);
  }
  return theta;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

Output forward(const ParamVector& theta, std::span<const double> e) {
  Matrix x(1, e.size());
  std::copy(e.begin(), e.end(), x.row(0).begin());
  double z = 0.0;
  kernels::logits_serial(theta, x, {&z, 1});
  return {z, sigmoid(z)};
}

std::vector<double> logits(const ParamVector& theta, const Batch& batch) {
  std::vector<double> out(batch.size());
  kernels::logits_parallel(theta, batch.features(), out);
  return out;
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double mean_ce(std::span<const double> z, std::span<const int> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double p = clamp_prob(sigmoid(z[i]));
    acc -= y[i] ? std::log(p) : std::log(1.0 - p);
  }
  return acc / static_cast<double>(z.size());
}

void require_nonempty(const Batch& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
}

bool penalty_active(const TaskObjective& obj) {
  return obj.penalty != Penalty::none && obj.weight != 0.0;
}

}  // namespace

double loss_ce(const ParamVector& theta, const Batch& batch) {
  require_nonempty(batch);
  const auto z = logits(theta, batch);
  return mean_ce(z, batch.labels());
}

double ObjectiveValue::lagrangian() const {
  if (weight == 0.0) return loss;
  return loss + weight * constraint;
}

ObjectiveValue evaluate_objective(const ParamVector& theta, const Batch& batch,
                                  const TaskObjective& objective) {
  require_nonempty(batch);
  const auto z = logits(theta, batch);
  ObjectiveValue v;
  v.weight = penalty_active(objective) ? objective.weight : 0.0;
  v.loss = mean_ce(z, batch.labels());
  v.dbc = dbc(z, batch.groups());
  switch (objective.penalty) {
    case Penalty::none:
    case Penalty::dbc:
      v.constraint = std::abs(v.dbc) - objective.c;
      v.degenerate = !batch.has_both_groups();
      break;
    case Penalty::demographic_parity:
    case Penalty::equal_opportunity: {
      std::vector<double> p(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) p[i] = sigmoid(z[i]);
      try {
        v.constraint = objective.penalty == Penalty::demographic_parity
                           ? r_dp(p, batch.groups())
                           : r_eop(p, batch.labels(), batch.groups());
      } catch (const UndefinedMetric&) {
        v.constraint = 0.0;
        v.degenerate = true;
      }
      break;
    }
  }
  return v;
}

Gradient objective_gradient(const ParamVector& theta, const Batch& batch,
                            const TaskObjective& objective, bool* degenerate) {
  require_nonempty(batch);
  const auto z = logits(theta, batch);
  const std::size_t h = batch.size();
  const double inv_h = 1.0 / static_cast<double>(h);
  const auto y = batch.labels();
  const auto s = batch.groups();
  std::vector<double> coeff(h);
  for (std::size_t i = 0; i < h; ++i) coeff[i] = (sigmoid(z[i]) - y[i]) * inv_h;

  bool degen = false;
  if (penalty_active(objective)) {
    const double w = objective.weight;
    switch (objective.penalty) {
      case Penalty::none:
        break;
      case Penalty::dbc: {
        degen = !batch.has_both_groups();
        const double sign = constraint_subgrad_sign(dbc(z, s));
        if (sign != 0.0) {
          double sbar = 0.0;
          for (int v : s) sbar += v;
          sbar *= inv_h;
          for (std::size_t i = 0; i < h; ++i) coeff[i] += w * sign * (s[i] - sbar) * inv_h;
        }
        break;
      }
      case Penalty::demographic_parity:
      case Penalty::equal_opportunity: {
        const bool eop = objective.penalty == Penalty::equal_opportunity;
        std::size_t n = 0;
        for (std::size_t i = 0; i < h; ++i) n += s[i] == 0 && (!eop || y[i] == 1);
        if (n == 0) {
          degen = true;
          break;
        }
        const double scale = w / static_cast<double>(n);
        for (std::size_t i = 0; i < h; ++i) {
          if (s[i] == 0 && (!eop || y[i] == 1)) {
            const double p = sigmoid(z[i]);
            coeff[i] -= scale * p * (1.0 - p);
          }
        }
        break;
      }
    }
  }
  if (degenerate != nullptr) *degenerate = degen;

  Gradient grad(theta.size(), 0.0);
  kernels::backprop_parallel(theta, batch.features(), coeff, grad);
  return grad;
}

Gradient grad_loss_ce(const ParamVector& theta, const Batch& batch) {
  return objective_gradient(theta, batch, TaskObjective{});
}

Gradient grad_lagrangian(const ParamVector& theta, const DualVector& mu, const Batch& batch,
                         double c) {
  if (mu.size() != 1) throw DimensionError("grad_lagrangian: expected one multiplier");
  return objective_gradient(theta, batch, TaskObjective{Penalty::dbc, mu[0], c});
}

Gradient finite_diff_grad(const std::function<double(const ParamVector&)>& fn,
                          const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  Gradient g(theta.size());
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = fn(probe);
    probe[i] = orig - h;
    const double down = fn(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace pdfm
