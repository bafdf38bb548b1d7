#include "aobs/observer/observer.hpp"

#include <cmath>
#include <limits>

#include "aobs/errors.hpp"
#include "aobs/matkit/linalg.hpp"

namespace aobs::observer {

using namespace matkit;

std::vector<std::string> ObserverConfig::problems(const plant::KnownStructure& known) const {
  std::vector<std::string> p;
  const std::size_t n = known.n(), np = known.p(), s = known.s();
  if (L.rows() != n || L.cols() != np) p.push_back("observer L must be n×p = " + std::to_string(n) + "×" + std::to_string(np));
  if (M.rows() != s || M.cols() != np) p.push_back("observer M must be s×p = " + std::to_string(s) + "×" + std::to_string(np));
  if (!(mu > 0.0)) p.push_back("observer mu must be positive");
  if (xhat0.size() != n) p.push_back("observer xhat0 must have n entries");
  if (p.empty() && known.A.is_square() && known.C.cols() == n && !is_hurwitz(known.A + L * known.C))
    p.push_back("A + L·C is not Hurwitz");
  return p;
}

ObserverConfig duffing_observer() {
  return ObserverConfig{Mat{{-30.5749}, {-64.3579}}, Mat{{28.644}}, 25.0, Vec{0.0, 0.0}};
}

Vec disturbance_estimate(const ObserverConfig& cfg, const Mat& C, std::span<const double> xhat,
                         std::span<const double> y) {
  Vec innovation = C * xhat;
  for (std::size_t i = 0; i < innovation.size(); ++i) innovation[i] -= y[i];
  Vec d = cfg.M * innovation;
  for (auto& v : d) v *= -cfg.mu;
  return d;
}

Vec observer_rhs(const plant::KnownStructure& known, const ObserverConfig& cfg, double t,
                 std::span<const double> xhat, std::span<const double> y, std::span<const double> u,
                 std::span<const double> theta_hat) {
  Vec innovation = known.C * xhat;
  for (std::size_t i = 0; i < innovation.size(); ++i) innovation[i] -= y[i];
  Vec dhat = cfg.M * innovation;
  for (auto& v : dhat) v *= -cfg.mu;

  Vec dx = known.A * xhat;
  const Vec phi = known.maps.phi(y, u);
  const Vec g_theta = known.maps.g(y, u) * theta_hat;
  const Vec d_term = known.D * dhat;
  const Vec l_term = cfg.L * innovation;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += phi[i] + g_theta[i] + d_term[i] + l_term[i];
  if (!all_finite(dx)) throw ObserverFault("observer: non-finite derivative at t=" + std::to_string(t));
  return dx;
}

MatchingReport verify_matching(const Mat& A, const Mat& C, const Mat& D, const Mat& L, const Mat& P,
                               const Mat& Q, const Mat& M) {
  const std::size_t n = A.rows();
  if (!A.is_square() || C.cols() != n || D.rows() != n || L.rows() != n || L.cols() != C.rows() ||
      P.rows() != n || !P.is_square() || Q.rows() != n || !Q.is_square() || M.rows() != D.cols() ||
      M.cols() != C.rows())
    throw DimensionError("verify_matching: inconsistent dimensions");
  const Mat acl = A + L * C;
  MatchingReport r;
  r.lyapunov_residual = spectral_norm(acl.transposed() * P + P * acl + Q);
  r.matching_residual = spectral_norm(D.transposed() * P - M * C);
  r.p_positive = is_positive_definite(P);
  r.q_positive = is_positive_definite(Q);
  r.pass = r.lyapunov_residual <= 1e-6 * spectral_norm(Q) && r.matching_residual <= 1e-6 * spectral_norm(P) &&
           r.p_positive && r.q_positive;
  return r;
}

namespace {

struct Candidate {
  MatchingSuggestion s;
  bool valid = false;
};

Candidate evaluate(const Mat& acl, const Mat& C, const Mat& Cpinv, const Mat& D, const Vec& q) {
  Candidate c;
  c.s.Q = Mat::diagonal(q);
  try {
    c.s.P = solve_lyapunov(acl, c.s.Q);
  } catch (const SolverError&) {
    return c;
  }
  const Mat dtp = D.transposed() * c.s.P;
  c.s.M = dtp * Cpinv;
  c.s.residual = spectral_norm(dtp - c.s.M * C);
  const double scale = spectral_norm(dtp);
  c.s.relative_residual = scale > 0.0 ? c.s.residual / scale : std::numeric_limits<double>::infinity();
  c.valid = true;
  return c;
}

}  // namespace

MatchingSuggestion suggest_matching(const Mat& A, const Mat& C, const Mat& D, const Mat& L) {
  const std::size_t n = A.rows();
  if (!A.is_square() || C.cols() != n || D.rows() != n || L.rows() != n || L.cols() != C.rows())
    throw DimensionError("suggest_matching: inconsistent dimensions");
  const Mat acl = A + L * C;
  if (!is_hurwitz(acl)) throw SolverError("suggest_matching: A + L·C is not Hurwitz", NAN);
  const Mat Cpinv = pinv(C);

  Vec grid;
  for (int k = 0; k <= 16; ++k) grid.push_back(std::pow(10.0, -2.0 + 0.25 * k));
  const std::size_t g = grid.size();

  Candidate best;
  auto consider = [&](const Vec& q) {
    Candidate c = evaluate(acl, C, Cpinv, D, q);
    if (c.valid && (!best.valid || c.s.relative_residual < best.s.relative_residual)) best = std::move(c);
  };

  double combos = std::pow(static_cast<double>(g), static_cast<double>(n));
  if (combos <= 1e5) {
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      Vec q(n);
      for (std::size_t i = 0; i < n; ++i) q[i] = grid[idx[i]];
      consider(q);
      std::size_t k = 0;
      while (k < n && ++idx[k] == g) idx[k++] = 0;
      if (k == n) break;
    }
  } else {
    // Cyclic coordinate descent over the same grid, starting from Q = I.
    std::vector<std::size_t> idx(n, 8);
    Vec q(n, 1.0);
    consider(q);
    for (int pass = 0; pass < 20; ++pass) {
      bool improved = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < g; ++k) {
          if (k == idx[i]) continue;
          Vec trial = q;
          trial[i] = grid[k];
          const double before = best.s.relative_residual;
          consider(trial);
          if (best.s.relative_residual < before) {
            q = trial;
            idx[i] = k;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  if (!best.valid) throw SolverError("suggest_matching: no grid point produced a Lyapunov solution", NAN);
  return best.s;
}

}  // namespace aobs::observer
