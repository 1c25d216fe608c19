#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version; tests hold the two against each other and bench/ times them.
//
// The OpenMP versions reduce over fixed-size row chunks in chunk order, so the
// result does not depend on the thread count or schedule.

#include <cstddef>
#include <span>
#include <vector>

#include "pdfm/matrix.hpp"
#include "pdfm/model.hpp"

namespace pdfm::kernels {

inline constexpr std::size_t kRowChunk = 64;

void logits_serial(const ParamVector& theta, const Matrix& x, std::span<double> out);
void logits_parallel(const ParamVector& theta, const Matrix& x, std::span<double> out);

/// grad += sum_i coeff[i] * d logit_i / d theta
void backprop_serial(const ParamVector& theta, const Matrix& x, std::span<const double> coeff,
                     std::span<double> grad);
void backprop_parallel(const ParamVector& theta, const Matrix& x, std::span<const double> coeff,
                       std::span<double> grad);

/// k nearest rows of every row by Euclidean distance, the row itself
/// excluded, ties broken by lower index. Row-major n x k result.
std::vector<std::size_t> knn_serial(const Matrix& x, std::size_t k);
std::vector<std::size_t> knn_parallel(const Matrix& x, std::size_t k);

}  // namespace pdfm::kernels
