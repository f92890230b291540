#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "attnconf/error.hpp"

namespace attnconf {

/// Dense row-major matrix of doubles. Row i is output token i, column j is
/// input token j.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_)
        throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    m.rows_ = rows.size();
    m.cols_ = m.rows_ ? rows.front().size() : 0;
    m.data_.reserve(m.rows_ * m.cols_);
    for (const auto& row : rows) {
      if (row.size() != m.cols_)
        throw Error(ErrorKind::DimensionMismatch, "ragged matrix rows");
      m.data_.insert(m.data_.end(), row.begin(), row.end());
    }
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Unnormalized attention energies, one row per output token.
class RawAttentionMatrix {
 public:
  explicit RawAttentionMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorKind::EmptyMatrix, "raw attention matrix has no entries");
    for (double v : values_.data())
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "raw attention entry is not finite");
  }

  const Matrix& values() const noexcept { return values_; }
  std::size_t output_len() const noexcept { return values_.rows(); }
  std::size_t input_len() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

enum class IngestMode { Strict, Lenient };

/// Largest distance of a row sum from 1 accepted without renormalization.
inline constexpr double kRowSumTolerance = 1e-4;

/// Row-stochastic attention weights. Every entry is non-negative and finite and
/// every row sums to 1 within kRowSumTolerance.
class AttentionMatrix {
 public:
  AttentionMatrix() = default;

  /// Validates `values`. In lenient mode rows outside the tolerance are
  /// rescaled to sum to 1 and `renormalized` (if given) is set.
  static AttentionMatrix validate(Matrix values, IngestMode mode = IngestMode::Strict,
                                  bool* renormalized = nullptr) {
    if (renormalized) *renormalized = false;
    if (values.empty()) throw Error(ErrorKind::EmptyMatrix, "attention matrix has no entries");
    for (double v : values.data()) {
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorKind::InvalidWeight, "attention weights must be finite and non-negative");
    }
    for (std::size_t i = 0; i < values.rows(); ++i) {
      auto row = values.row(i);
      double sum = 0.0;
      for (double v : row) sum += v;
      if (std::abs(sum - 1.0) <= kRowSumTolerance) continue;
      if (mode == IngestMode::Strict || sum <= 0.0)
        throw Error(ErrorKind::RowSumViolation,
                    "row " + std::to_string(i) + " sums to " + std::to_string(sum));
      for (double& v : row) v /= sum;
      if (renormalized) *renormalized = true;
    }
    AttentionMatrix m;
    m.values_ = std::move(values);
    return m;
  }

  const Matrix& values() const noexcept { return values_; }
  std::size_t output_len() const noexcept { return values_.rows(); }
  std::size_t input_len() const noexcept { return values_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }

  friend bool operator==(const AttentionMatrix&, const AttentionMatrix&) = default;

 private:
  Matrix values_;
};

}  // namespace attnconf
