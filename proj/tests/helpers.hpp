#pragma once

#include <cstdint>

#include "pdfm/model.hpp"
#include "pdfm/rng.hpp"

namespace pdfm::testing {

// Random rows with N(0,1) features; y and s are fair coins, and the first
// two rows force both protected groups to be present.
inline Batch random_batch(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Batch b(dim);
  std::vector<double> e(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : e) v = rng.normal();
    const int y = rng.uniform() < 0.5;
    const int s = i < 2 ? static_cast<int>(i) : rng.uniform() < 0.5;
    b.add(e, y, s, i);
  }
  return b;
}

inline NetworkArch small_arch(int input_dim) {
  NetworkArch a;
  a.input_dim = input_dim;
  a.hidden_dims = {5, 4};
  return a;
}

// Glorot weights plus N(0, 0.1^2) on every entry. With zero biases a row
// that switches off a whole layer feeds exact zeros into the next ReLU,
// where central differences straddle the kink; the offsets avoid that.
inline ParamVector generic_params(const NetworkArch& arch, std::uint64_t seed) {
  ParamVector theta = init_params(arch, seed);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ull);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
  return theta;
}

}  // namespace pdfm::testing
