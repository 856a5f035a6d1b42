#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ppgbench/errors.hpp"

namespace ppgbench {

// Row-major dense matrix, sized for desk-scale models (T, d_model <= a few
// hundred). Deliberately minimal: the transformer backward passes below are
// easier to audit against the forward code when every product is explicit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  void add_scaled(const Matrix& other, double scale) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
  }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) raise(ErrorCode::ShapeMismatch, "matmul inner dims");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// A must be square. Throws SingularSystem when a pivot collapses relative
// to the matrix scale.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

// --- small statistics helpers shared by baselines and eval ---

double vec_mean(const std::vector<double>& v);
double vec_median(std::vector<double> v);          // by value: sorts a copy
double vec_stddev_population(const std::vector<double>& v);
double vec_iqr(std::vector<double> v);             // p75 - p25, linear interp

}  // namespace ppgbench
