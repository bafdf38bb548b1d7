#include "aobs/matkit/scaled.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "aobs/errors.hpp"

namespace aobs::matkit {

namespace {

constexpr int kTableMin = -300;
constexpr int kTableMax = 300;

const std::array<double, kTableMax - kTableMin + 1>& pow10_table() {
  static const auto table = [] {
    std::array<double, kTableMax - kTableMin + 1> t{};
    for (int k = kTableMin; k <= kTableMax; ++k) t[static_cast<std::size_t>(k - kTableMin)] = std::pow(10.0, k);
    return t;
  }();
  return table;
}

double pow10_small(int k) { return pow10_table()[static_cast<std::size_t>(k - kTableMin)]; }

// Split |x| into mantissa in [1,10) and decimal exponent.
void decompose(double ax, double& mantissa, std::int64_t& exponent) {
  auto k = static_cast<std::int64_t>(std::floor(std::log10(ax)));
  double m = times_pow10(ax, -k);
  if (m >= 10.0) {
    m /= 10.0;
    ++k;
  } else if (m < 1.0) {
    m *= 10.0;
    --k;
  }
  mantissa = m;
  exponent = k;
}

}  // namespace

double times_pow10(double x, std::int64_t k) {
  while (k > kTableMax) {
    x *= pow10_small(kTableMax);
    k -= kTableMax;
    if (!std::isfinite(x) || x == 0.0) return x;
  }
  while (k < kTableMin) {
    x *= pow10_small(kTableMin);
    k -= kTableMin;
    if (x == 0.0 || !std::isfinite(x)) return x;
  }
  return x * pow10_small(static_cast<int>(k));
}

ScaledScalar::ScaledScalar(double x) {
  if (x == 0.0) return;
  sign_ = std::signbit(x) ? -1 : 1;
  if (!std::isfinite(x)) {
    mantissa_ = std::abs(x);
    return;
  }
  decompose(std::abs(x), mantissa_, exponent_);
}

ScaledScalar ScaledScalar::from_parts(int sign, double mantissa, std::int64_t exponent10) {
  if (sign == 0 || mantissa == 0.0) return {};
  ScaledScalar s(std::abs(mantissa));
  s.sign_ = (sign < 0) != std::signbit(mantissa) ? -1 : 1;
  s.exponent_ += exponent10;
  return s;
}

ScaledScalar ScaledScalar::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto epos = text.find_first_of("eE");
  const std::string_view mant_part = text.substr(0, epos);
  double mant = 0.0;
  auto [p1, e1] = std::from_chars(mant_part.data(), mant_part.data() + mant_part.size(), mant,
                                  std::chars_format::fixed);
  if (mant_part.empty() || e1 != std::errc{} || p1 != mant_part.data() + mant_part.size())
    throw std::invalid_argument("not a decimal number: '" + std::string(text) + "'");
  std::int64_t exp = 0;
  if (epos != std::string_view::npos) {
    std::string_view exp_part = text.substr(epos + 1);
    if (!exp_part.empty() && exp_part.front() == '+') exp_part.remove_prefix(1);
    auto [p2, e2] = std::from_chars(exp_part.data(), exp_part.data() + exp_part.size(), exp);
    if (exp_part.empty() || e2 != std::errc{} || p2 != exp_part.data() + exp_part.size())
      throw std::invalid_argument("bad exponent in '" + std::string(text) + "'");
  }
  return ScaledScalar(mant).times_pow10(exp);
}

double ScaledScalar::to_double() const noexcept {
  if (sign_ == 0) return 0.0;
  return sign_ * matkit::times_pow10(mantissa_, exponent_);
}

double ScaledScalar::to_double_checked(std::string_view what) const {
  const double v = to_double();
  if (!std::isfinite(v) && std::isfinite(mantissa_))
    throw OverflowError(std::string(what) + " = " + to_string() + " exceeds double range");
  return v;
}

double ScaledScalar::log10_abs() const noexcept {
  if (sign_ == 0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(exponent_) + std::log10(mantissa_);
}

ScaledScalar ScaledScalar::abs() const noexcept {
  ScaledScalar r = *this;
  if (r.sign_ < 0) r.sign_ = 1;
  return r;
}

ScaledScalar ScaledScalar::operator-() const noexcept {
  ScaledScalar r = *this;
  r.sign_ = -r.sign_;
  return r;
}

ScaledScalar ScaledScalar::times_pow10(std::int64_t k) const noexcept {
  ScaledScalar r = *this;
  if (r.sign_ != 0) r.exponent_ += k;
  return r;
}

ScaledScalar operator*(const ScaledScalar& a, const ScaledScalar& b) noexcept {
  if (a.sign_ == 0 || b.sign_ == 0) return {};
  ScaledScalar r;
  r.sign_ = a.sign_ * b.sign_;
  double m = a.mantissa_ * b.mantissa_;
  r.exponent_ = a.exponent_ + b.exponent_;
  if (m >= 10.0) {
    m /= 10.0;
    ++r.exponent_;
  }
  r.mantissa_ = m;
  return r;
}

ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b) {
  if (b.sign_ == 0) throw std::domain_error("ScaledScalar division by zero");
  if (a.sign_ == 0) return {};
  ScaledScalar r;
  r.sign_ = a.sign_ * b.sign_;
  double m = a.mantissa_ / b.mantissa_;
  r.exponent_ = a.exponent_ - b.exponent_;
  if (m < 1.0) {
    m *= 10.0;
    --r.exponent_;
  }
  r.mantissa_ = m;
  return r;
}

ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b) noexcept {
  if (a.sign_ == 0) return b;
  if (b.sign_ == 0) return a;
  const ScaledScalar& hi = a.exponent_ >= b.exponent_ ? a : b;
  const ScaledScalar& lo = a.exponent_ >= b.exponent_ ? b : a;
  const std::int64_t gap = hi.exponent_ - lo.exponent_;
  if (gap > 40) return hi;
  const double sum = hi.sign_ * hi.mantissa_ + lo.sign_ * matkit::times_pow10(lo.mantissa_, -gap);
  return ScaledScalar(sum).times_pow10(hi.exponent_);
}

ScaledScalar operator-(const ScaledScalar& a, const ScaledScalar& b) noexcept { return a + (-b); }

std::partial_ordering operator<=>(const ScaledScalar& a, const ScaledScalar& b) noexcept {
  if (std::isnan(a.mantissa_) || std::isnan(b.mantissa_)) return std::partial_ordering::unordered;
  if (a.sign_ != b.sign_) return a.sign_ <=> b.sign_;
  if (a.sign_ == 0) return std::partial_ordering::equivalent;
  std::partial_ordering mag = a.exponent_ != b.exponent_
                                  ? static_cast<std::partial_ordering>(a.exponent_ <=> b.exponent_)
                                  : a.mantissa_ <=> b.mantissa_;
  if (a.sign_ > 0) return mag;
  if (mag == std::partial_ordering::less) return std::partial_ordering::greater;
  if (mag == std::partial_ordering::greater) return std::partial_ordering::less;
  return mag;
}

std::string ScaledScalar::to_string() const {
  if (sign_ == 0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.17ge%lld", sign_ < 0 ? "-" : "", mantissa_,
                static_cast<long long>(exponent_));
  return buf;
}

// ---------------------------------------------------------------------------

ScaledMat ScaledMat::from(const Mat& m) { return from(m, 0); }

ScaledMat ScaledMat::from(const Mat& m, std::int64_t exp10) {
  ScaledMat s{m, exp10};
  s.normalize();
  return s;
}

ScaledMat& ScaledMat::normalize() {
  const double mx = max_abs(mant);
  if (mx == 0.0) {
    exp10 = 0;
    return *this;
  }
  if (!std::isfinite(mx)) return *this;
  double m;
  std::int64_t k;
  decompose(mx, m, k);
  if (k != 0) {
    for (auto& v : mant.flat()) v = times_pow10(v, -k);
    exp10 += k;
  }
  return *this;
}

Mat ScaledMat::to_mat() const noexcept {
  Mat out = mant;
  if (exp10 != 0)
    for (auto& v : out.flat()) v = times_pow10(v, exp10);
  return out;
}

Mat ScaledMat::to_mat_checked(std::string_view what) const {
  Mat out = to_mat();
  if (!out.all_finite() && mant.all_finite())
    throw OverflowError(std::string(what) + " exceeds double range (exponent " + std::to_string(exp10) + ")");
  return out;
}

Vec ScaledMat::to_vec_checked(std::string_view what) const {
  const Mat m = to_mat_checked(what);
  return Vec(m.flat().begin(), m.flat().end());
}

ScaledMat operator*(const ScaledMat& a, const ScaledMat& b) {
  ScaledMat r{a.mant * b.mant, a.exp10 + b.exp10};
  r.normalize();
  return r;
}

ScaledMat operator*(const ScaledScalar& s, const ScaledMat& m) {
  if (s.is_zero()) return ScaledMat{Mat(m.rows(), m.cols()), 0};
  ScaledMat r{m.mant * (s.sign() * s.mantissa()), m.exp10 + s.exponent10()};
  r.normalize();
  return r;
}

namespace {
ScaledMat combine(const ScaledMat& a, const ScaledMat& b, double sign_b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("ScaledMat sum: shape mismatch");
  if (b.is_zero()) return a;
  if (a.is_zero()) return ScaledMat{b.mant * sign_b, b.exp10};
  const std::int64_t e = std::max(a.exp10, b.exp10);
  ScaledMat r{Mat(a.rows(), a.cols()), e};
  auto out = r.mant.flat();
  const auto fa = a.mant.flat();
  const auto fb = b.mant.flat();
  const double sa = times_pow10(1.0, a.exp10 - e);
  const double sb = sign_b * times_pow10(1.0, b.exp10 - e);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = fa[k] * sa + fb[k] * sb;
  r.normalize();
  return r;
}
}  // namespace

ScaledMat operator+(const ScaledMat& a, const ScaledMat& b) { return combine(a, b, 1.0); }
ScaledMat operator-(const ScaledMat& a, const ScaledMat& b) { return combine(a, b, -1.0); }

}  // namespace aobs::matkit
