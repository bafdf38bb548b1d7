#include <doctest.h>

#include <cmath>
#include <random>

#include "aobs/drem/drem.hpp"
#include "aobs/errors.hpp"
#include "aobs/matkit/linalg.hpp"
#include "aobs/simkit/simkit.hpp"
#include "oracles.hpp"

using namespace aobs::drem;
using namespace aobs::matkit;
using aobs::plant::duffing_preset;
using aobs::plant::PlantModel;

namespace {

const Mat kDuffingK{{30.5749}, {64.3579}};

Mat random_symmetric(std::mt19937_64& rng, std::size_t n) {
  const Mat a = oracle::random_mat(rng, n, n);
  return a + a.transposed();
}

double rel_err(const Vec& a, const Vec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

}  // namespace

TEST_CASE("filter bank with zero excitation evolves only Φ_K, matching the exponential") {
  PlantModel m = duffing_preset(0.0);
  const FilterBank bank(m.known, kDuffingK);
  Vec s = bank.initial_state(Vec{0.0, 0.0});
  const Vec y{0.0}, u{0.0};
  const aobs::simkit::VectorField f = [&](double, std::span<const double> x) {
    Vec dx(x.size());
    bank.rhs(x, y, u, dx);
    return dx;
  };
  const double dt = 1e-3;
  for (int k = 0; k < 1000; ++k) s = aobs::simkit::rk4_step(f, k * dt, s, dt);
  for (std::size_t i = 0; i < 2 + 2 + 4; ++i) CHECK(s[i] == 0.0);
  CHECK(oracle::max_abs_diff(bank.phi_k(s), oracle::expm(bank.AK(), 1.0)) <= 1e-6);
}

TEST_CASE("filter bank construction checks") {
  const PlantModel m = duffing_preset();
  CHECK_THROWS_AS(FilterBank(m.known, Mat{{-1.0}, {0.0}}), aobs::SolverError);
  CHECK_THROWS_AS(FilterBank(m.known, Mat{{1.0, 2.0}}), aobs::DimensionError);
  const FilterBank bank(m.known, kDuffingK);
  CHECK(bank.dim() == 2 + 2 + 4 + 4);
  CHECK(bank.AK() == Mat{{-30.5749, 1.0}, {-63.3579, -0.2}});
}

TEST_CASE("raw regression at t0") {
  const PlantModel m = duffing_preset();
  const FilterBank bank(m.known, kDuffingK);
  const Vec s = bank.initial_state(Vec{0.0, 0.0});
  const RawRegression r = raw_regression(bank, s, m.known.C * m.x0);
  CHECK(r.z == 2.0);
  CHECK(r.phi == Vec{0.0, 0.0});
}

TEST_CASE("z − φᵀθ − w vanishes along a Duffing run") {
  // State: [x (2) | bank (12) | δ_f (2)]. The filtered disturbance δ_f and
  // Φ_K·e0 give the regression error w in closed form.
  const PlantModel m = duffing_preset(2.5);
  const FilterBank bank(m.known, kDuffingK);
  const Vec chi0{0.5, -0.25};
  Vec s = m.x0;
  const Vec b0 = bank.initial_state(chi0);
  s.insert(s.end(), b0.begin(), b0.end());
  s.insert(s.end(), {0.0, 0.0});
  const std::size_t nb = bank.dim();
  const aobs::simkit::VectorField f = [&](double t, std::span<const double> x) {
    Vec dx(x.size());
    const Vec xp(x.begin(), x.begin() + 2);
    const Vec d = aobs::plant::plant_rhs(m, t, xp);
    dx[0] = d[0];
    dx[1] = d[1];
    const Vec y = m.known.C * xp;
    bank.rhs(x.subspan(2, nb), y, m.input(t), std::span<double>(dx).subspan(2, nb));
    const double* df = x.data() + 2 + nb;
    const Vec ad = bank.AK() * std::span<const double>(df, 2);
    const Vec dd = m.known.D * m.delta(t);
    dx[2 + nb] = ad[0] - dd[0];
    dx[3 + nb] = ad[1] - dd[1];
    return dx;
  };
  const Vec e0 = chi0 - m.x0;
  double worst = 0.0;
  const double dt = 1e-3;
  for (int k = 0; k <= 50000; ++k) {
    if (k % 100 == 0) {
      const std::span<const double> bs(s.data() + 2, nb);
      const Vec y = m.known.C * std::span<const double>(s.data(), 2);
      const RawRegression r = raw_regression(bank, bs, y);
      const Vec e = bank.phi_k(bs) * e0 + Vec{s[2 + nb], s[3 + nb]};
      const double w = -(m.known.C * e)[0];
      worst = std::max(worst, std::abs(r.z - dot(r.phi, m.theta_true) - w));
    }
    s = aobs::simkit::rk4_step(f, k * dt, s, dt);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("extension with constant basis regressor fills the window") {
  const std::size_t q = 1;
  const double T = 0.5, dt = 1e-3;
  const std::size_t N = aobs::simkit::steps_in(T, dt);
  const Vec sample{1.0, 0.0, 1.0, 0.0};  // z̃ = 1, φ_s = e1
  const Vec zero(4, 0.0);
  Vec w(2 + 4, 0.0), dw(6);
  for (std::size_t k = 0; k < 3 * N; ++k) {
    extension_rhs(q, sample, k < N ? zero : sample, T, dw);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += dt * dw[i];
    if (k + 1 == N / 2) CHECK(w[0] == doctest::Approx(0.5));
  }
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] == 0.0);
  CHECK(w[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[3] == 0.0);
  CHECK(w[5] == 0.0);

  extension_rhs(q, Vec{0.0, 0.0, 0.7, 0.3}, zero, T, dw);
  CHECK(dw[0] == 0.0);
  CHECK(dw[1] == 0.0);
}

TEST_CASE("annihilator configuration") {
  const AnnihilatorConfig c = AnnihilatorConfig::duffing();
  CHECK(c.q == 2);
  CHECK(c.m == 1);
  CHECK(c.L1.transposed() == Mat{{0, 1, 0, 0}, {0, 0, 0, 1}});
  CHECK(c.L2.transposed() == Mat{{1, 0, 0, 0}, {0, 0, 1, 0}});
  CHECK(c.L0() == Mat{{1, 0, 0, 0}, {0, 1, 0, 0}});
  CHECK(c.Ht == AnnihilatorConfig::default_ht(2, 1));

  // Selector completeness and orthonormality.
  CHECK(c.L1 * c.L1.transposed() + c.L2 * c.L2.transposed() == Mat::identity(4));
  CHECK(c.L1.transposed() * c.L1 == Mat::identity(2));
  CHECK(c.L2.transposed() * c.L2 == Mat::identity(2));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double a = d(rng), b = d(rng);
    CHECK(c.Ht * Vec{a, b, -a, -b} == Vec{0.0, 0.0});
  }

  // q = 4, m = 2, non-default selectors.
  const Mat l1t{{1, 0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 1, 0, 0}, {0, 0, 0, 0, 0, 0, 1, 0}, {0, 0, 1, 0, 0, 0, 0, 0}};
  const AnnihilatorConfig c4 = AnnihilatorConfig::from_selectors(l1t, AnnihilatorConfig::default_ht(4, 2));
  CHECK(c4.L1 * c4.L1.transposed() + c4.L2 * c4.L2.transposed() == Mat::identity(8));
  CHECK(c4.L2.cols() == 4);

  CHECK(AnnihilatorConfig::problems(Mat{{0, 1, 0, 0}, {0, 1, 0, 0}}, Mat{{1, 0, 1, 0}, {0, 1, 0, 1}}).size() == 1);
  CHECK(AnnihilatorConfig::problems(Mat{{0, 2, 0, 0}, {0, 0, 0, 1}}, Mat{{1, 0, 1, 0}, {1, 0, 1, 0}}).size() == 3);
  CHECK(AnnihilatorConfig::problems(Mat{{0, 1, 0, 0}, {0, 0, 0, 1}}, Mat{{1, 0, 0, 1}, {0, 1, 0, 1}}).size() == 1);
  CHECK_THROWS_AS(AnnihilatorConfig::from_selectors(Mat{{0, 1, 0}}, Mat{{0, 1, 0}}), aobs::ValidationError);
}

TEST_CASE("annihilate: zero window") {
  const AnnihilatorConfig c = AnnihilatorConfig::duffing();
  const Annihilated a = annihilate(c, Vec(4, 0.0), Mat(4, 4));
  CHECK(a.lambda.is_zero());
  CHECK(a.omega_mat.is_zero());
  CHECK(a.M.is_zero());
}

TEST_CASE("annihilate: exact algebra without disturbance") {
  const AnnihilatorConfig c = AnnihilatorConfig::duffing();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mat phi = random_symmetric(rng, 4);
    const double t1 = d(rng), t2 = d(rng);
    const Vec theta{t1, t2, -t1, -t2};
    const Annihilated a = annihilate(c, phi * theta, phi);
    if (a.M.is_zero()) continue;
    const Vec lhs = a.lambda.to_mat().col_vec(0);
    const Vec rhs = a.omega_mat.to_mat() * theta;
    CHECK(rel_err(lhs, rhs) <= 1e-9);
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("annihilate removes the 𝓛₁ part of the disturbance") {
  // Y = ΦΘ + 𝓛₁W₁ + 𝓛₂W₂: λ − Ω_matΘ does not depend on W₁.
  const AnnihilatorConfig c = AnnihilatorConfig::duffing();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Mat phi = random_symmetric(rng, 4);
    const Vec theta{d(rng), d(rng)};
    const Vec big{theta[0], theta[1], -theta[0], -theta[1]};
    const Vec w2{d(rng), d(rng)};
    const Vec base = phi * big + c.L2 * w2;
    const Annihilated a0 = annihilate(c, base, phi);
    const Annihilated a1 = annihilate(c, base + c.L1 * Vec{d(rng), d(rng)}, phi);
    const Vec r0 = a0.lambda.to_mat().col_vec(0) - a0.omega_mat.to_mat() * big;
    const Vec r1 = a1.lambda.to_mat().col_vec(0) - a1.omega_mat.to_mat() * big;
    CHECK(rel_err(r1, r0) <= 1e-8);
  }
}

TEST_CASE("annihilate is exact at extreme scales") {
  const AnnihilatorConfig c = AnnihilatorConfig::duffing();
  std::mt19937_64 rng(99);
  const Mat phi = random_symmetric(rng, 4);
  const Vec theta{1.0, 3.0, -1.0, -3.0};
  const Annihilated ref = annihilate(c, phi * theta, phi);
  const Mat tiny = 1e-60 * phi;
  const Annihilated a = annihilate(c, tiny * theta, tiny);
  // det(4×4) adds a factor s^3 to adj(Φ); B adds s^3 per entry, 𝓜 = det(B) gets s^6, Ω_mat = 𝓜Φ gets s^7.
  CHECK(a.omega_mat.exp10 == ref.omega_mat.exp10 - 420);
  CHECK(oracle::max_abs_diff(a.omega_mat.mant, ref.omega_mat.mant) <= 1e-12);
  CHECK(a.lambda.exp10 == ref.lambda.exp10 - 420);
}

TEST_CASE("scalarization filters") {
  const Mat om{{2.0, 1.0}, {1.0, 3.0}};
  const Vec lam{0.5, -1.0};
  Vec s(6, 0.0), ds(6);
  scalarize_rhs(s, Mat(2, 2), Vec{0.0, 0.0}, 1.0, ds);
  CHECK(ds == Vec(6, 0.0));

  const double k = 2.0, dt = 1e-3;
  const aobs::simkit::VectorField f = [&](double, std::span<const double> x) {
    Vec dx(x.size());
    scalarize_rhs(x, om, lam, k, dx);
    return dx;
  };
  for (int i = 0; i < 1000; ++i) s = aobs::simkit::rk4_step(f, i * dt, s, dt);
  const double g = 1.0 - std::exp(-k * 1.0);
  CHECK(s[0] == doctest::Approx(2.0 * g).epsilon(1e-10));
  CHECK(s[3] == doctest::Approx(3.0 * g).epsilon(1e-10));
  CHECK(s[5] == doctest::Approx(-1.0 * g).epsilon(1e-10));
}

TEST_CASE("final regression") {
  SUBCASE("identity filter") {
    const Vec lf{0.1, 0.2, -0.3, 0.4};
    const FinalRegression r = final_regression(Mat::identity(4), lf, Mat::identity(4), 1.0);
    CHECK(r.omega.to_double() == doctest::Approx(1.0));
    CHECK(r.omega_dot.is_zero());
    const Vec L = r.Lambda.to_mat().col_vec(0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(L[i] == doctest::Approx(lf[i]));
  }
  SUBCASE("scale covariance") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
      const Mat of = random_symmetric(rng, 4) + 3.0 * Mat::identity(4);
      const Mat om = random_symmetric(rng, 4);
      const Vec lf = oracle::random_mat(rng, 4, 1).col_vec(0);
      const FinalRegression a = final_regression(of, lf, om, 1.0);
      const FinalRegression b = final_regression(of, lf, om, 1.0, ScaledScalar::parse("1e-40"));
      CHECK(b.omega.exponent10() - a.omega.exponent10() == -160);
      CHECK(b.omega.mantissa() == doctest::Approx(a.omega.mantissa()).epsilon(1e-12));
      CHECK(b.Lambda.exp10 - a.Lambda.exp10 == -160);
      // Λ/ω is gauge invariant.
      for (std::size_t k = 0; k < 4; ++k) {
        const double ra = (a.Lambda.at(k, 0) / a.omega).to_double();
        const double rb = (b.Lambda.at(k, 0) / b.omega).to_double();
        CHECK(rb == doctest::Approx(ra).epsilon(1e-11));
      }
    }
  }
  SUBCASE("Jacobi formula against a central difference") {
    // Ω_f(t) = E + t·F + t²·G; choosing Ω_mat = Ω_f + Ω̇_f/k makes the filter
    // derivative equal the true time derivative.
    std::mt19937_64 rng(8);
    const Mat E = random_symmetric(rng, 4) + 4.0 * Mat::identity(4);
    const Mat F = random_symmetric(rng, 4), G = random_symmetric(rng, 4);
    const double k = 1.0, t = 0.3, h = 1e-5;
    auto path = [&](double s) { return E + s * F + (s * s) * G; };
    const Mat dpath = F + (2.0 * t) * G;
    const Vec lf(4, 1.0);
    const FinalRegression r = final_regression(path(t), lf, path(t) + (1.0 / k) * dpath, k);
    const double fd = (oracle::laplace_det(path(t + h)) - oracle::laplace_det(path(t - h))) / (2 * h);
    CHECK(r.omega_dot.to_double() == doctest::Approx(fd).epsilon(1e-7));
    CHECK(r.omega.to_double() == doctest::Approx(oracle::laplace_det(path(t))).epsilon(1e-12));
  }
}
