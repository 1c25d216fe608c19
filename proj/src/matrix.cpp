#include "pdfm/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace pdfm {

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw std::invalid_argument("Matrix::push_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::drop_column(std::size_t col) const {
  if (col >= cols_) throw std::out_of_range("Matrix::drop_column");
  Matrix out(rows_, cols_ - 1);
  for (std::size_t i = 0; i < rows_; ++i) {
    auto src = row(i);
    auto dst = out.row(i);
    std::size_t k = 0;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j != col) dst[k++] = src[j];
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace pdfm
