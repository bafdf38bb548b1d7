#include "aobs/matkit/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "aobs/errors.hpp"

namespace aobs::matkit {

namespace {

constexpr std::size_t kMaxMinor = 16;

void require_square(const Mat& m, const char* op) {
  if (!m.is_square()) throw DimensionError(std::string(op) + ": matrix must be square");
}

// Determinant of a k×k row-major block (k ≤ kMaxMinor) in plain double arithmetic.
double small_det(std::array<double, kMaxMinor * kMaxMinor>& a, std::size_t k) {
  switch (k) {
    case 0: return 1.0;
    case 1: return a[0];
    case 2: return a[0] * a[3] - a[1] * a[2];
    case 3:
      return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
             a[2] * (a[3] * a[7] - a[4] * a[6]);
    default: break;
  }
  double d = 1.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(a[r * k + c]) > std::abs(a[piv * k + c])) piv = r;
    const double pv = a[piv * k + c];
    if (pv == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t j = 0; j < k; ++j) std::swap(a[c * k + j], a[piv * k + j]);
      d = -d;
    }
    d *= pv;
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = a[r * k + c] / pv;
      if (f == 0.0) continue;
      for (std::size_t j = c + 1; j < k; ++j) a[r * k + j] -= f * a[c * k + j];
    }
  }
  return d;
}

// Determinant of m with row `skip_r` and column `skip_c` removed.
double minor_det(const Mat& m, std::size_t skip_r, std::size_t skip_c) {
  const std::size_t n = m.rows();
  std::array<double, kMaxMinor * kMaxMinor> buf;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip_r) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == skip_c) continue;
      buf[idx++] = m(i, j);
    }
  }
  return small_det(buf, n - 1);
}

Mat cofactor_adjugate(const Mat& m) {
  const std::size_t n = m.rows();
  if (n == 0) return Mat();
  if (n == 1) return Mat{{1.0}};
  if (n == 2) return Mat{{m(1, 1), -m(0, 1)}, {-m(1, 0), m(0, 0)}};
  if (n > kMaxMinor + 1) throw DimensionError("adjugate: matrix too large");
  Mat adj(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = minor_det(m, i, j);
      adj(j, i) = ((i + j) % 2 == 0) ? c : -c;
    }
  return adj;
}

}  // namespace

ScaledScalar det(const Mat& m) {
  require_square(m, "det");
  return det(ScaledMat::from(m));
}

ScaledScalar det(const ScaledMat& sm) {
  const Mat& m = sm.mant;
  require_square(m, "det");
  const std::size_t n = m.rows();
  if (n == 0) return ScaledScalar(1.0);
  Mat a = m;
  ScaledScalar d(1.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    const double pv = a(piv, c);
    if (pv == 0.0) return {};
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      d = -d;
    }
    d *= ScaledScalar(pv);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / pv;
      if (f == 0.0) continue;
      for (std::size_t j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return d.times_pow10(static_cast<std::int64_t>(n) * sm.exp10);
}

Mat adjugate(const Mat& m) {
  require_square(m, "adjugate");
  return adjugate(ScaledMat::from(m)).to_mat();
}

ScaledMat adjugate(const ScaledMat& m) {
  require_square(m.mant, "adjugate");
  const auto n = static_cast<std::int64_t>(m.rows());
  return ScaledMat::from(cofactor_adjugate(m.mant), n > 0 ? (n - 1) * m.exp10 : 0);
}

ScaledScalar trace_product_adj(const Mat& a, const Mat& b) {
  return trace_product_adj(ScaledMat::from(a), ScaledMat::from(b));
}

ScaledScalar trace_product_adj(const ScaledMat& a, const ScaledMat& b) {
  require_square(a.mant, "trace_product_adj");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("trace_product_adj: operands differ in size");
  const ScaledMat adj = adjugate(a);
  const std::size_t n = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s += adj.mant(i, j) * b.mant(j, i);
  return ScaledScalar(s).times_pow10(adj.exp10 + b.exp10);
}

Mat solve(const Mat& a_in, const Mat& b_in) {
  require_square(a_in, "solve");
  if (b_in.rows() != a_in.rows()) throw DimensionError("solve: right-hand side has wrong row count");
  const std::size_t n = a_in.rows();
  Mat a = a_in;
  Mat b = b_in;
  const double scale = std::max(max_abs(a), std::numeric_limits<double>::min());
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (std::abs(a(piv, c)) <= 1e-14 * scale)
      throw SolverError("solve: matrix is singular to working precision", std::abs(a(piv, c)));
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(c, j), b(piv, j));
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(c, j);
    }
  }
  for (std::size_t jc = 0; jc < b.cols(); ++jc)
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, jc);
      for (std::size_t k = ii + 1; k < n; ++k) s -= a(ii, k) * b(k, jc);
      b(ii, jc) = s / a(ii, ii);
    }
  return b;
}

Mat solve_lyapunov(const Mat& acl, const Mat& q) {
  require_square(acl, "solve_lyapunov");
  require_square(q, "solve_lyapunov");
  if (q.rows() != acl.rows()) throw DimensionError("solve_lyapunov: acl and q differ in size");
  const std::size_t n = acl.rows();
  const double qn = frobenius_norm(q);
  if (frobenius_norm(q - q.transposed()) > 1e-12 * std::max(qn, 1.0))
    throw std::invalid_argument("solve_lyapunov: q must be symmetric");

  // Row-major vec(P): unknown p(i,j) sits at i*n + j.
  Mat big(n * n, n * n);
  Mat rhs(n * n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t r = i * n + j;
      for (std::size_t k = 0; k < n; ++k) {
        big(r, k * n + j) += acl(k, i);
        big(r, i * n + k) += acl(k, j);
      }
      rhs(r, 0) = -q(i, j);
    }
  Mat sol;
  try {
    sol = solve(big, rhs);
  } catch (const SolverError& e) {
    throw SolverError("solve_lyapunov: vectorized system singular (acl has eigenvalues summing to zero)",
                      e.residual());
  }
  Mat p = Mat::from_flat(n, n, sol.flat());
  p = 0.5 * (p + p.transposed());
  const double residual = frobenius_norm(acl.transposed() * p + p * acl + q);
  if (residual > 1e-9 * std::max(qn, 1e-300))
    throw SolverError("solve_lyapunov: residual too large", residual);
  if (!is_positive_definite(p))
    throw SolverError("solve_lyapunov: solution not positive definite (acl not Hurwitz)", residual);
  return p;
}

bool is_hurwitz(const Mat& acl) {
  if (!acl.is_square()) throw DimensionError("is_hurwitz: matrix must be square");
  try {
    (void)solve_lyapunov(acl, Mat::identity(acl.rows()));
    return true;
  } catch (const SolverError&) {
    return false;
  }
}

bool is_positive_definite(const Mat& m) {
  require_square(m, "is_positive_definite");
  const std::size_t n = m.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = 0.5 * (m(j, j) + m(j, j));
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.5 * (m(i, j) + m(j, i));
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

Svd svd(const Mat& m) {
  if (m.rows() < m.cols()) {
    Svd t = svd(m.transposed());
    return Svd{t.v, t.sigma, t.u};
  }
  const std::size_t rows = m.rows();
  const std::size_t n = m.cols();
  Mat u = m;
  Mat v = Mat::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += u(i, p) * u(i, p);
          beta += u(i, q) * u(i, q);
          gamma += u(i, p) * u(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    if (!rotated) break;
  }
  Vec sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    sigma[j] = norm2(u.col_vec(j));
    if (sigma[j] > 0.0)
      for (std::size_t i = 0; i < rows; ++i) u(i, j) /= sigma[j];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sigma[a] > sigma[b]; });
  Svd out{Mat(rows, n), Vec(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    for (std::size_t i = 0; i < rows; ++i) out.u(i, k) = u(i, j);
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
  }
  return out;
}

double spectral_norm(const Mat& m) {
  if (m.empty()) return 0.0;
  const Svd s = svd(m);
  return s.sigma.empty() ? 0.0 : s.sigma.front();
}

Mat pinv(const Mat& m) {
  Mat out(m.cols(), m.rows());
  if (m.empty() || max_abs(m) == 0.0) return out;
  const Svd s = svd(m);
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * s.sigma.front();
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    if (s.sigma[k] <= tol) continue;
    const double inv = 1.0 / s.sigma[k];
    for (std::size_t i = 0; i < m.cols(); ++i)
      for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += s.v(i, k) * inv * s.u(j, k);
  }
  return out;
}

SymmetricEigen symmetric_eigen(const Mat& m, int sweeps) {
  require_square(m, "symmetric_eigen");
  const std::size_t n = m.rows();
  Mat a = 0.5 * (m + m.transposed());
  Mat v = Mat::identity(n);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vec(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace aobs::matkit
