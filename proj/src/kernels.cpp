#include "pdfm/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <utility>

#include <omp.h>

namespace pdfm::kernels {
namespace {

// Activations of every layer for one example; acts[0] is the input.
class Workspace {
 public:
  explicit Workspace(const NetworkArch& arch) : layers_(arch.layers()) {
    acts_.resize(layers_.size() + 1);
    acts_[0].resize(static_cast<std::size_t>(arch.input_dim));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      acts_[l + 1].resize(static_cast<std::size_t>(layers_[l].out));
    }
    delta_.resize(acts_.size());
    for (std::size_t l = 0; l < acts_.size(); ++l) delta_[l].resize(acts_[l].size());
  }

  double forward(std::span<const double> p, std::span<const double> x, bool bias) {
    std::copy(x.begin(), x.end(), acts_[0].begin());
    const std::size_t depth = layers_.size();
    for (std::size_t l = 0; l < depth; ++l) {
      const LayerShape& ls = layers_[l];
      const auto& in = acts_[l];
      auto& out = acts_[l + 1];
      const double* w = p.data() + ls.w_offset;
      for (int o = 0; o < ls.out; ++o) {
        double z = bias ? p[ls.b_offset + static_cast<std::size_t>(o)] : 0.0;
        const double* wr = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        for (int i = 0; i < ls.in; ++i) z += wr[i] * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = (l + 1 < depth) ? std::max(0.0, z) : z;
      }
    }
    return acts_[depth][0];
  }

  // Requires a preceding forward() on the same example.
  void backward(std::span<const double> p, double coeff, std::span<double> grad, bool bias) {
    const std::size_t depth = layers_.size();
    delta_[depth][0] = coeff;
    for (std::size_t l = depth; l-- > 0;) {
      const LayerShape& ls = layers_[l];
      const auto& in = acts_[l];
      const auto& d = delta_[l + 1];
      double* gw = grad.data() + ls.w_offset;
      for (int o = 0; o < ls.out; ++o) {
        const double dv = d[static_cast<std::size_t>(o)];
        if (bias) grad[ls.b_offset + static_cast<std::size_t>(o)] += dv;
        double* gr = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        for (int i = 0; i < ls.in; ++i) gr[i] += dv * in[static_cast<std::size_t>(i)];
      }
      if (l == 0) break;
      auto& dprev = delta_[l];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      const double* w = p.data() + ls.w_offset;
      for (int o = 0; o < ls.out; ++o) {
        const double dv = d[static_cast<std::size_t>(o)];
        const double* wr = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        for (int i = 0; i < ls.in; ++i) dprev[static_cast<std::size_t>(i)] += wr[i] * dv;
      }
      for (std::size_t i = 0; i < dprev.size(); ++i) {
        if (!(in[i] > 0.0)) dprev[i] = 0.0;
      }
    }
  }

 private:
  std::vector<LayerShape> layers_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> delta_;
};

void check_input(const ParamVector& theta, const Matrix& x) {
  if (static_cast<int>(x.cols()) != theta.arch().input_dim) {
    throw DimensionError("feature width " + std::to_string(x.cols()) +
                         " does not match network input " +
                         std::to_string(theta.arch().input_dim));
  }
}

std::size_t chunk_count(std::size_t rows) { return (rows + kRowChunk - 1) / kRowChunk; }

// Keeps the k best (distance, index) pairs in ascending order.
void knn_row(const Matrix& x, std::size_t i, std::size_t k, std::span<std::size_t> out) {
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  const auto xi = x.row(i);
  for (std::size_t j = 0; j < x.rows(); ++j) {
    if (j == i) continue;
    const double d = distance2(xi, x.row(j));
    if (best.size() == k && !(std::make_pair(d, j) < best.back())) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(d, j));
    best.insert(pos, {d, j});
    if (best.size() > k) best.pop_back();
  }
  for (std::size_t r = 0; r < k; ++r) out[r] = best[r].second;
}

void check_knn(const Matrix& x, std::size_t k) {
  if (k < 1 || k >= x.rows()) {
    throw std::invalid_argument("knn: need 1 <= k < number of rows");
  }
}

}  // namespace

void logits_serial(const ParamVector& theta, const Matrix& x, std::span<double> out) {
  check_input(theta, x);
  Workspace ws(theta.arch());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i] = ws.forward(theta.values(), x.row(i), theta.arch().bias);
  }
}

void logits_parallel(const ParamVector& theta, const Matrix& x, std::span<double> out) {
  check_input(theta, x);
  const auto n = static_cast<std::ptrdiff_t>(chunk_count(x.rows()));
#pragma omp parallel
  {
    Workspace ws(theta.arch());
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      const std::size_t lo = static_cast<std::size_t>(c) * kRowChunk;
      const std::size_t hi = std::min(x.rows(), lo + kRowChunk);
      for (std::size_t i = lo; i < hi; ++i) {
        out[i] = ws.forward(theta.values(), x.row(i), theta.arch().bias);
      }
    }
  }
}

void backprop_serial(const ParamVector& theta, const Matrix& x, std::span<const double> coeff,
                     std::span<double> grad) {
  check_input(theta, x);
  Workspace ws(theta.arch());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (coeff[i] == 0.0) continue;
    ws.forward(theta.values(), x.row(i), theta.arch().bias);
    ws.backward(theta.values(), coeff[i], grad, theta.arch().bias);
  }
}

void backprop_parallel(const ParamVector& theta, const Matrix& x, std::span<const double> coeff,
                       std::span<double> grad) {
  check_input(theta, x);
  const std::size_t chunks = chunk_count(x.rows());
  if (chunks <= 1) {
    backprop_serial(theta, x, coeff, grad);
    return;
  }
  const std::size_t p = theta.size();
  std::vector<double> partial(chunks * p, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel
  {
    Workspace ws(theta.arch());
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      const std::size_t lo = static_cast<std::size_t>(c) * kRowChunk;
      const std::size_t hi = std::min(x.rows(), lo + kRowChunk);
      std::span<double> g(partial.data() + static_cast<std::size_t>(c) * p, p);
      for (std::size_t i = lo; i < hi; ++i) {
        if (coeff[i] == 0.0) continue;
        ws.forward(theta.values(), x.row(i), theta.arch().bias);
        ws.backward(theta.values(), coeff[i], g, theta.arch().bias);
      }
    }
  }
  for (std::size_t c = 0; c < chunks; ++c) {
    const double* g = partial.data() + c * p;
    for (std::size_t j = 0; j < p; ++j) grad[j] += g[j];
  }
}

std::vector<std::size_t> knn_serial(const Matrix& x, std::size_t k) {
  check_knn(x, k);
  std::vector<std::size_t> out(x.rows() * k);
  for (std::size_t i = 0; i < x.rows(); ++i) knn_row(x, i, k, {out.data() + i * k, k});
  return out;
}

std::vector<std::size_t> knn_parallel(const Matrix& x, std::size_t k) {
  check_knn(x, k);
  std::vector<std::size_t> out(x.rows() * k);
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    knn_row(x, r, k, {out.data() + r * k, k});
  }
  return out;
}

}  // namespace pdfm::kernels
