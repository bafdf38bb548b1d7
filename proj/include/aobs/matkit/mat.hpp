#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace aobs::matkit {

using Vec = std::vector<double>;

/// Dense row-major real matrix. Sized for the small systems handled here
/// (dimensions up to ~8), so everything is by value.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
  static Mat column(std::span<const double> v);
  static Mat row(std::span<const double> v);
  static Mat diagonal(std::span<const double> v);
  /// Reinterpret a row-major flat block as a matrix.
  static Mat from_flat(std::size_t rows, std::size_t cols, std::span<const double> flat);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  Vec row_vec(std::size_t i) const;
  Vec col_vec(std::size_t j) const;

  Mat transposed() const;
  bool all_finite() const noexcept;

  Mat& operator+=(const Mat& rhs);
  Mat& operator-=(const Mat& rhs);
  Mat& operator*=(double s);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat lhs, const Mat& rhs);
Mat operator-(Mat lhs, const Mat& rhs);
Mat operator-(Mat m);
Mat operator*(Mat m, double s);
Mat operator*(double s, Mat m);
Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, std::span<const double> x);

double frobenius_norm(const Mat& m) noexcept;
double max_abs(const Mat& m) noexcept;
double trace(const Mat& m);

// Vector helpers.
Vec operator+(Vec a, std::span<const double> b);
Vec operator-(Vec a, std::span<const double> b);
Vec operator*(double s, Vec v);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v) noexcept;
double max_abs(std::span<const double> v) noexcept;
bool all_finite(std::span<const double> v) noexcept;
/// a·bᵀ
Mat outer(std::span<const double> a, std::span<const double> b);

}  // namespace aobs::matkit
