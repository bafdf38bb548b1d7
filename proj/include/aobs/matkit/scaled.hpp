#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "aobs/matkit/mat.hpp"

namespace aobs::matkit {

/// Multiply by 10^k without intermediate overflow of the power itself.
double times_pow10(double x, std::int64_t k);

/// Real number held as sign · mantissa · 10^exponent10 with mantissa in [1, 10).
///
/// Determinants of the regressor matrices sit around 1e-125 and the adaptation
/// gain around 1e248, so products such as gain·det² are formed by exponent
/// addition first and only then collapsed to a double.
class ScaledScalar {
 public:
  constexpr ScaledScalar() = default;
  ScaledScalar(double x);  // NOLINT(google-explicit-constructor): lossless widening

  static ScaledScalar from_parts(int sign, double mantissa, std::int64_t exponent10);
  /// Decimal or scientific literal with an unrestricted exponent, e.g. "1e248", "-2.5E-1000".
  static ScaledScalar parse(std::string_view text);
  static ScaledScalar pow10(std::int64_t k) { return from_parts(1, 1.0, k); }

  int sign() const noexcept { return sign_; }
  double mantissa() const noexcept { return mantissa_; }
  std::int64_t exponent10() const noexcept { return exponent_; }
  bool is_zero() const noexcept { return sign_ == 0; }

  /// Plain double; underflows to ±0 and overflows to ±inf like ordinary arithmetic.
  double to_double() const noexcept;
  /// Plain double, throwing OverflowError instead of producing inf.
  double to_double_checked(std::string_view what = "value") const;
  /// log10|x|; -inf for zero.
  double log10_abs() const noexcept;

  ScaledScalar abs() const noexcept;
  ScaledScalar operator-() const noexcept;
  ScaledScalar times_pow10(std::int64_t k) const noexcept;

  friend ScaledScalar operator*(const ScaledScalar& a, const ScaledScalar& b) noexcept;
  friend ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b);
  friend ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b) noexcept;
  friend ScaledScalar operator-(const ScaledScalar& a, const ScaledScalar& b) noexcept;
  ScaledScalar& operator*=(const ScaledScalar& o) noexcept { return *this = *this * o; }
  ScaledScalar& operator+=(const ScaledScalar& o) noexcept { return *this = *this + o; }

  friend std::partial_ordering operator<=>(const ScaledScalar& a, const ScaledScalar& b) noexcept;
  friend bool operator==(const ScaledScalar& a, const ScaledScalar& b) noexcept = default;

  std::string to_string() const;

 private:
  int sign_ = 0;
  double mantissa_ = 0.0;
  std::int64_t exponent_ = 0;
};

/// Matrix with one shared decimal exponent: value = mant · 10^exp10.
/// Normalized so that max|mant| lies in [1, 10), or mant is all zero with exp10 = 0.
struct ScaledMat {
  Mat mant;
  std::int64_t exp10 = 0;

  static ScaledMat from(const Mat& m);
  static ScaledMat from(const Mat& m, std::int64_t exp10);
  static ScaledMat column(std::span<const double> v) { return from(Mat::column(v)); }

  std::size_t rows() const noexcept { return mant.rows(); }
  std::size_t cols() const noexcept { return mant.cols(); }
  bool is_zero() const noexcept { return max_abs(mant) == 0.0; }

  ScaledScalar at(std::size_t i, std::size_t j) const {
    return ScaledScalar(mant(i, j)).times_pow10(exp10);
  }
  /// Plain matrix; entries below the double range flush to zero.
  Mat to_mat() const noexcept;
  /// Plain matrix, throwing OverflowError when any entry would exceed the double range.
  Mat to_mat_checked(std::string_view what = "matrix") const;
  Vec to_vec_checked(std::string_view what = "vector") const;

  ScaledMat& normalize();
};

ScaledMat operator*(const ScaledMat& a, const ScaledMat& b);
ScaledMat operator*(const ScaledScalar& s, const ScaledMat& m);
ScaledMat operator+(const ScaledMat& a, const ScaledMat& b);
ScaledMat operator-(const ScaledMat& a, const ScaledMat& b);

}  // namespace aobs::matkit
