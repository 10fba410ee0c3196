#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace cfrank {

// Dense row-major table of doubles. Factor tables keep one entity per row,
// so row(i) is the r-dimensional embedding of entity i.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
  return s;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t t = 0; t < x.size(); ++t) y[t] += alpha * x[t];
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double frobenius_sq(const Matrix& m) { return squared_norm(m.flat()); }

// Entries drawn i.i.d. N(0, stddev^2), row by row.
template <class Rng>
void fill_gaussian(Matrix& m, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : m.storage()) x = dist(rng);
}

inline bool all_finite(const Matrix& m) {
  for (double x : m.flat())
    if (!std::isfinite(x)) return false;
  return true;
}

// ||a - b|| / max(||b||, tiny); the norm-wise relative deviation used by the
// kernel equivalence checks.
inline double relative_deviation(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double num = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) num += (a[t] - b[t]) * (a[t] - b[t]);
  double den = squared_norm(b);
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace cfrank
