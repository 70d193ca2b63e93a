#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcl {

/// Thrown when operand shapes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown on non-finite values or failed numerical preconditions.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on invalid API usage (empty subsets, missing fields, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown on invalid configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major double matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double v);
  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

[[nodiscard]] std::string shape_str(const Matrix& m);

/// out = a · bᵀ  (a: m×k, b: n×k)
[[nodiscard]] Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// out = a · b   (a: m×k, b: k×n)
[[nodiscard]] Matrix matmul(const Matrix& a, const Matrix& b);
/// out = aᵀ · b  (a: k×m, b: k×n)
[[nodiscard]] Matrix matmul_tn(const Matrix& a, const Matrix& b);

[[nodiscard]] Matrix transpose(const Matrix& a);
/// Column-wise concatenation; all inputs share a row count.
[[nodiscard]] Matrix hconcat(std::span<const Matrix* const> parts);
[[nodiscard]] Matrix hconcat(const Matrix& a, const Matrix& b);
/// Columns [begin, begin + count).
[[nodiscard]] Matrix col_slice(const Matrix& a, std::size_t begin, std::size_t count);
/// Rows selected by index.
[[nodiscard]] Matrix gather_rows(const Matrix& a, std::span<const std::size_t> idx);

void add_inplace(Matrix& dst, const Matrix& src);
[[nodiscard]] double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace fcl
