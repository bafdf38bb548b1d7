#include "aobs/matkit/mat.hpp"

#include <algorithm>
#include <cmath>

#include "aobs/errors.hpp"

namespace aobs::matkit {

namespace {
void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch");
}
}  // namespace

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::column(std::span<const double> v) {
  Mat m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Mat Mat::row(std::span<const double> v) {
  Mat m(1, v.size());
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Mat Mat::diagonal(std::span<const double> v) {
  Mat m(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
  return m;
}

Mat Mat::from_flat(std::size_t rows, std::size_t cols, std::span<const double> flat) {
  if (flat.size() != rows * cols) throw DimensionError("from_flat: size mismatch");
  Mat m(rows, cols);
  std::copy(flat.begin(), flat.end(), m.data_.begin());
  return m;
}

Vec Mat::row_vec(std::size_t i) const {
  return Vec(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
             data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

Vec Mat::col_vec(std::size_t j) const {
  Vec v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Mat::all_finite() const noexcept { return matkit::all_finite(data_); }

Mat& Mat::operator+=(const Mat& rhs) {
  require_same_shape(*this, rhs, "operator+");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& rhs) {
  require_same_shape(*this, rhs, "operator-");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Mat operator+(Mat lhs, const Mat& rhs) { return lhs += rhs; }
Mat operator-(Mat lhs, const Mat& rhs) { return lhs -= rhs; }
Mat operator-(Mat m) { return m *= -1.0; }
Mat operator*(Mat m, double s) { return m *= s; }
Mat operator*(double s, Mat m) { return m *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix product: inner dimensions differ");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("matrix-vector product: size mismatch");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double frobenius_norm(const Mat& m) noexcept { return norm2(m.flat()); }

double max_abs(const Mat& m) noexcept { return max_abs(m.flat()); }

double trace(const Mat& m) {
  if (!m.is_square()) throw DimensionError("trace: matrix not square");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

Vec operator+(Vec a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("vector sum: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Vec operator-(Vec a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("vector difference: size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

Vec operator*(double s, Vec v) {
  for (auto& x : v) x *= s;
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) noexcept {
  // Scaled accumulation so tiny or huge entries do not under/overflow the squares.
  const double scale = max_abs(v);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : v) {
    const double r = x / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Mat outer(std::span<const double> a, std::span<const double> b) {
  Mat m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

}  // namespace aobs::matkit
