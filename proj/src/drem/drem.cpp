#include "aobs/drem/drem.hpp"

#include <cmath>

#include "aobs/errors.hpp"
#include "aobs/matkit/linalg.hpp"

namespace aobs::drem {

using namespace matkit;

FilterBank::FilterBank(const plant::KnownStructure& known, Mat K)
    : known_(known), n_(known.n()), q_(known.q()), K_(std::move(K)) {
  if (K_.rows() != n_ || K_.cols() != known.p())
    throw DimensionError("filter gain K must be n×p = " + std::to_string(n_) + "×" + std::to_string(known.p()));
  AK_ = known.A - K_ * known.C;
  if (!is_hurwitz(AK_)) throw SolverError("A − K·C is not Hurwitz", NAN);
  c_sum_.assign(n_, 0.0);
  for (std::size_t i = 0; i < known.p(); ++i)
    for (std::size_t j = 0; j < n_; ++j) c_sum_[j] += known.C(i, j);
  g_ = Mat(n_, q_);
}

Vec FilterBank::initial_state(std::span<const double> chi0) const {
  if (chi0.size() != n_) throw DimensionError("chi0 must have n entries");
  Vec s(dim(), 0.0);
  std::copy(chi0.begin(), chi0.end(), s.begin());
  for (std::size_t i = 0; i < n_; ++i) s[2 * n_ + n_ * q_ + i * n_ + i] = 1.0;
  return s;
}

void FilterBank::rhs(std::span<const double> s, std::span<const double> y, std::span<const double> u,
                     std::span<double> ds) const {
  const std::size_t n = n_, q = q_;
  const double* chi = s.data();
  const double* pf = chi + n;
  const double* om = pf + n;
  const double* pk = om + n * q;
  double* dchi = ds.data();
  double* dpf = dchi + n;
  double* dom = dpf + n;
  double* dpk = dom + n * q;

  known_.maps.g_into(y, u, g_);
  Vec phi(n);
  known_.maps.phi_into(y, u, phi);

  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      a += AK_(i, k) * chi[k];
      b += AK_(i, k) * pf[k];
    }
    for (std::size_t k = 0; k < y.size(); ++k) a += K_(i, k) * y[k];
    dchi[i] = a;
    dpf[i] = b + phi[i];
    for (std::size_t j = 0; j < q; ++j) {
      double c = g_(i, j);
      for (std::size_t k = 0; k < n; ++k) c += AK_(i, k) * om[k * q + j];
      dom[i * q + j] = c;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += AK_(i, k) * pk[k * n + j];
      dpk[i * n + j] = c;
    }
  }
}

double FilterBank::z(std::span<const double> s, std::span<const double> y) const {
  double z = 0.0;
  for (double v : y) z += v;
  for (std::size_t j = 0; j < n_; ++j) z -= c_sum_[j] * (s[j] + s[n_ + j]);
  return z;
}

void FilterBank::phi_into(std::span<const double> s, std::span<double> phi) const {
  const double* om = s.data() + 2 * n_;
  for (std::size_t j = 0; j < q_; ++j) {
    double v = 0.0;
    for (std::size_t k = 0; k < n_; ++k) v += c_sum_[k] * om[k * q_ + j];
    phi[j] = v;
  }
}

RawRegression raw_regression(const FilterBank& bank, std::span<const double> s, std::span<const double> y) {
  RawRegression r;
  r.z = bank.z(s, y);
  r.phi.resize(bank.q());
  bank.phi_into(s, r.phi);
  return r;
}

void extension_rhs(std::size_t q, std::span<const double> now, std::span<const double> delayed, double T,
                   std::span<double> d_window) {
  const std::size_t d = 2 * q;
  if (d > 16) throw DimensionError("extension_rhs: at most 8 parameters supported");
  double a[16], b[16];
  double za = now[0] - now[1], zb = delayed[0] - delayed[1];
  for (std::size_t i = 0; i < d; ++i) {
    a[i] = now[2 + i];
    b[i] = delayed[2 + i];
  }
  const double inv = 1.0 / T;
  for (std::size_t i = 0; i < d; ++i) d_window[i] = (a[i] * za - b[i] * zb) * inv;
  double* dphi = d_window.data() + d;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) dphi[i * d + j] = (a[i] * a[j] - b[i] * b[j]) * inv;
}

std::vector<std::string> AnnihilatorConfig::problems(const Mat& l1t, const Mat& ht) {
  std::vector<std::string> p;
  if (l1t.cols() == 0 || l1t.cols() % 2 != 0) p.push_back("L1t must have 2q columns");
  if (l1t.rows() == 0 || l1t.rows() % 2 != 0) p.push_back("L1t must have 2m rows with m >= 1");
  if (ht.rows() != l1t.rows() || ht.cols() != l1t.cols()) p.push_back("Ht must have the same 2m×2q shape as L1t");
  if (!p.empty()) return p;

  const std::size_t d = l1t.cols(), q = d / 2, r = l1t.rows();
  if (r > q) p.push_back("2m must not exceed q");
  std::vector<bool> used(d, false);
  bool binary = true;
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t ones = 0, where = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = l1t(i, j);
      if (v != 0.0 && v != 1.0) binary = false;
      if (v == 1.0) {
        ++ones;
        where = j;
      }
    }
    if (ones != 1) {
      p.push_back("L1t row " + std::to_string(i + 1) + " must contain exactly one 1");
    } else if (used[where]) {
      p.push_back("L1t selects column " + std::to_string(where + 1) + " twice");
    } else {
      used[where] = true;
    }
  }
  if (!binary) p.push_back("L1t entries must be 0 or 1");

  Mat S(r, q);
  bool halves = true;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      S(i, j) = ht(i, j);
      if (ht(i, j) != ht(i, q + j)) halves = false;
    }
  if (!halves) p.push_back("Ht must have the form [S S] so that it annihilates [theta; -theta]");
  if (!ht.all_finite()) {
    p.push_back("Ht entries must be finite");
  } else if (r <= q) {
    const auto sv = svd(S);
    if (sv.sigma.empty() || sv.sigma.back() <= 1e-12 * std::max(1.0, sv.sigma.front()))
      p.push_back("Ht must have full row rank");
  }
  return p;
}

AnnihilatorConfig AnnihilatorConfig::from_selectors(const Mat& l1t, const Mat& ht) {
  if (auto p = problems(l1t, ht); !p.empty()) throw ValidationError(std::move(p));
  AnnihilatorConfig c;
  const std::size_t d = l1t.cols();
  c.q = d / 2;
  c.m = l1t.rows() / 2;
  c.L1 = l1t.transposed();
  c.Ht = ht;
  std::vector<bool> used(d, false);
  for (std::size_t i = 0; i < l1t.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (l1t(i, j) == 1.0) used[j] = true;
  c.L2 = Mat(d, d - l1t.rows());
  std::size_t col = 0;
  for (std::size_t j = 0; j < d; ++j)
    if (!used[j]) c.L2(j, col++) = 1.0;
  return c;
}

Mat AnnihilatorConfig::default_ht(std::size_t q, std::size_t m) {
  Mat h(2 * m, 2 * q);
  for (std::size_t i = 0; i < 2 * m && i < q; ++i) {
    h(i, i) = 1.0;
    h(i, q + i) = 1.0;
  }
  return h;
}

AnnihilatorConfig AnnihilatorConfig::duffing() {
  return from_selectors(Mat{{0, 1, 0, 0}, {0, 0, 0, 1}}, Mat{{1, 0, 1, 0}, {0, 1, 0, 1}});
}

Mat AnnihilatorConfig::L0() const {
  Mat l(q, 2 * q);
  for (std::size_t i = 0; i < q; ++i) l(i, i) = 1.0;
  return l;
}

Annihilated annihilate(const AnnihilatorConfig& cfg, std::span<const double> Y, const Mat& Phi) {
  const std::size_t d = 2 * cfg.q;
  if (Y.size() != d || Phi.rows() != d || Phi.cols() != d || cfg.L1.rows() != d || cfg.Ht.cols() != d)
    throw DimensionError("annihilate: Y, Phi and the selectors must all be 2q-dimensional");
  const ScaledMat phi = ScaledMat::from(Phi);
  const ScaledMat y = ScaledMat::column(Y);
  const ScaledMat adj_phi = adjugate(phi);
  const ScaledMat ht = ScaledMat::from(cfg.Ht);
  const ScaledMat l1 = ScaledMat::from(cfg.L1);

  const ScaledMat calY = adj_phi * y;
  const ScaledMat B = ht * adj_phi * l1;
  const ScaledMat N = adjugate(B) * (ht * calY);
  Annihilated a;
  a.M = det(B);
  a.lambda = a.M * y - l1 * N;
  a.omega_mat = a.M * phi;
  return a;
}

void scalarize_rhs(std::span<const double> s, const Mat& omega_mat, std::span<const double> lambda, double k,
                   std::span<double> ds) {
  const auto om = omega_mat.flat();
  const std::size_t nn = om.size();
  for (std::size_t i = 0; i < nn; ++i) ds[i] = k * (om[i] - s[i]);
  for (std::size_t i = 0; i < lambda.size(); ++i) ds[nn + i] = k * (lambda[i] - s[nn + i]);
}

FinalRegression final_regression(const Mat& omega_f, std::span<const double> lambda_f, const Mat& omega_mat,
                                 double k, const ScaledScalar& s_norm) {
  const ScaledMat of = s_norm * ScaledMat::from(omega_f);
  const ScaledMat lf = s_norm * ScaledMat::column(lambda_f);
  const ScaledMat of_dot = s_norm * ScaledMat::from(k * (omega_mat - omega_f));
  const ScaledMat adj = adjugate(of);
  FinalRegression r;
  r.Lambda = adj * lf;
  r.omega = det(of);
  r.omega_dot = trace_product_adj(of, of_dot);
  return r;
}

}  // namespace aobs::drem
