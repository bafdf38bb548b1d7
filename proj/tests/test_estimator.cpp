#include <doctest.h>

#include <cmath>
#include <random>

#include "aobs/drem/drem.hpp"
#include "aobs/errors.hpp"
#include "aobs/estimator/estimator.hpp"
#include "aobs/matkit/linalg.hpp"
#include "oracles.hpp"

using namespace aobs::estimator;
using namespace aobs::matkit;

namespace {

struct Synthetic {
  std::vector<double> t, err;
  std::vector<Vec> theta;
  std::vector<double> kappa_omega;
};

// ω(t) = s·(1 + 0.5 sin t), Λ = ω·[θ; −θ], integrated with RK4 on the gauged k.
Synthetic run_synthetic(const ScaledScalar& gamma, const ScaledScalar& s, double t_end, double dt = 1e-3) {
  EstimatorConfig cfg;
  cfg.gamma = gamma;
  const GaugedEstimator est(cfg);
  auto omega = [&](double t) { return s * ScaledScalar(1.0 + 0.5 * std::sin(t)); };
  auto omega_dot = [&](double t) { return s * ScaledScalar(0.5 * std::cos(t)); };
  const Vec theta{1.0, 3.0};
  Synthetic out;
  double k = est.initial_k();
  const auto steps = static_cast<int>(std::llround(t_end / dt));
  for (int i = 0; i <= steps; ++i) {
    const double t = i * dt;
    const ScaledScalar w = omega(t);
    const ScaledMat Lambda = w * ScaledMat::column(Vec{theta[0], theta[1], -theta[0], -theta[1]});
    out.t.push_back(t);
    out.theta.push_back(est.theta(k, Lambda, 2));
    const double ko = (est.kappa(k) * w).to_double();
    out.kappa_omega.push_back(ko);
    out.err.push_back(std::abs(ko - 1.0));
    OmegaSamples smp;
    const double ts[5] = {t, t + dt / 2, t + dt / 2, t + dt, t + dt};
    for (int j = 0; j < 5; ++j) {
      smp.omega[j] = omega(ts[j]);
      smp.omega_dot[j] = omega_dot(ts[j]);
    }
    k = est.step(k, smp, dt).next;
  }
  return out;
}

}  // namespace

TEST_CASE("estimator_rhs hand values") {
  CHECK(estimator_rhs(10.0, 0.0, 1.0, 0.0).to_double() == 10.0);
  CHECK(estimator_rhs(10.0, 0.5, 2.0, 0.0).is_zero());
  // At reference scale: γ = 1e248, ω = 1e-124, κ̂ = 0 → γω = 1e124.
  const ScaledScalar d = estimator_rhs(ScaledScalar::pow10(248), 0.0, ScaledScalar::pow10(-124), 0.0);
  CHECK(d.exponent10() == 124);
  CHECK(d.mantissa() == doctest::Approx(1.0));
  CHECK(estimator_rhs(2.0, 3.0, 0.0, 0.5).to_double() == doctest::Approx(-4.5));
  CHECK_THROWS_AS(estimator_rhs(ScaledScalar::pow10(500), 1.0, ScaledScalar::pow10(200), 0.0), aobs::EstimatorFault);
}

TEST_CASE("gauge choice and units") {
  EstimatorConfig cfg;
  const GaugedEstimator ref(cfg);
  CHECK(ref.gauge() == 124);
  cfg.gamma = 100.0;
  cfg.kappa0 = 3.0;
  const GaugedEstimator small(cfg);
  CHECK(small.gauge() == 1);
  CHECK(small.initial_k() == doctest::Approx(0.3));
  CHECK(small.kappa(0.3).to_double() == doctest::Approx(3.0));
  // dκ̂/dt = 10^g · dk/dt.
  const double dk = small.rhs(0.3, 0.7, 0.2);
  CHECK(dk * 10.0 == doctest::Approx(estimator_rhs(100.0, 3.0, 0.7, 0.2).to_double()).epsilon(1e-14));
}

TEST_CASE("synthetic ω: κ̂ tracks ω⁻¹") {
  const Synthetic r = run_synthetic(100.0, 1.0, 20.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.t.size(); ++i)
    if (r.t[i] >= 5.0) worst = std::max(worst, r.err[i]);
  CHECK(worst <= 1e-3);
  CHECK(r.theta.back()[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.theta.back()[1] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("gauge invariance under extreme rescaling") {
  const Synthetic a = run_synthetic(100.0, 1.0, 10.0);
  const Synthetic b = run_synthetic(ScaledScalar::pow10(202), ScaledScalar::pow10(-100), 10.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.t.size(); ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double ref = a.theta[i][j];
      worst = std::max(worst, std::abs(b.theta[i][j] - ref) / std::max(std::abs(ref), 1e-300));
    }
  CHECK(worst <= 1e-9);
}

TEST_CASE("equilibrium is preserved under constant ω") {
  EstimatorConfig cfg;
  cfg.gamma = ScaledScalar::pow10(248);
  const ScaledScalar omega = ScaledScalar::parse("3.7e-121");
  cfg.kappa0 = ScaledScalar(1.0) / omega;
  const GaugedEstimator est(cfg);
  double k = est.initial_k();
  const double dt = 1e-3;
  double worst = 0.0;
  OmegaSamples smp;
  for (auto& w : smp.omega) w = omega;
  for (auto& w : smp.omega_dot) w = 0.0;
  CHECK(est.step(k, smp, dt).stiff);
  for (int i = 0; i < 20000; ++i) {
    k = est.step(k, smp, dt).next;
    worst = std::max(worst, std::abs((est.kappa(k) * omega).to_double() - 1.0));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("stiff steps match the exact solution and stay stable") {
  // ω constant, ω̇ = 0: ε(t) = ε0·exp(−γω²t) exactly.
  EstimatorConfig cfg;
  cfg.gamma = 1e6;
  const GaugedEstimator est(cfg);
  OmegaSamples smp;
  for (auto& w : smp.omega) w = 2.0;
  for (auto& w : smp.omega_dot) w = 0.0;
  double k = 0.0;
  const double dt = 1e-3;
  for (int i = 0; i < 10; ++i) {
    const KappaStep st = est.step(k, smp, dt);
    CHECK(st.stiff);
    k = st.next;
  }
  const double eps = (est.kappa(k) * 2.0).to_double() - 1.0;
  CHECK(eps == doctest::Approx(-std::exp(-4e6 * 1e-2)).epsilon(1e-12));

  // Time-varying ω: against a fine RK4 reference on the same law.
  cfg.gamma = 2e3;
  const GaugedEstimator e2(cfg);
  auto w = [](double t) { return 1.0 + 0.5 * std::sin(5 * t); };
  auto wd = [](double t) { return 2.5 * std::cos(5 * t); };
  double kc = e2.initial_k(), kf = kc;
  const double hc = 1e-2;
  for (int i = 0; i < 100; ++i) {
    const double t = i * hc;
    OmegaSamples s;
    const double ts[5] = {t, t + hc / 2, t + hc / 2, t + hc, t + hc};
    for (int j = 0; j < 5; ++j) {
      s.omega[j] = w(ts[j]);
      s.omega_dot[j] = wd(ts[j]);
    }
    kc = e2.step(kc, s, hc).next;
    const double hf = hc / 100;
    for (int j = 0; j < 100; ++j) {
      const double tf = t + j * hf;
      auto f = [&](double tt, double kk) { return e2.rhs(kk, w(tt), wd(tt)); };
      const double k1 = f(tf, kf), k2 = f(tf + hf / 2, kf + hf / 2 * k1), k3 = f(tf + hf / 2, kf + hf / 2 * k2),
                   k4 = f(tf + hf, kf + hf * k3);
      kf += hf / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  CHECK(std::abs((e2.kappa(kc) * w(1.0)).to_double() - (e2.kappa(kf) * w(1.0)).to_double()) <= 1e-6);
}

TEST_CASE("tracking error shrinks while the C4 margin is positive") {
  const Synthetic r = run_synthetic(100.0, 1.0, 10.0);
  const ScaledScalar eta = 1e-3;
  int checked = 0;
  for (std::size_t i = 0; i + 1 < r.t.size(); ++i) {
    const double t = r.t[i];
    const double w = 1.0 + 0.5 * std::sin(t), wd = 0.5 * std::cos(t);
    const double kappa = r.kappa_omega[i] / w;
    if (monitor_c4(100.0, w, wd, kappa, eta).sign() <= 0) continue;
    // Up to the RK4 truncation floor of ~1e-10.
    CHECK(r.err[i + 1] <= r.err[i] + 1e-9);
    ++checked;
  }
  CHECK(checked > 9000);
}

TEST_CASE("read_theta") {
  const ScaledScalar w = ScaledScalar::parse("2.5e-123");
  const ScaledMat Lambda = w * ScaledMat::column(Vec{1.0, 3.0, -1.0, -3.0});
  const Vec th = read_theta(ScaledScalar(1.0) / w, Lambda, 2);
  CHECK(th[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(th[1] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(read_theta(0.0, Lambda, 2) == Vec{0.0, 0.0});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Vec a{d(rng), d(rng), d(rng), d(rng)}, b{d(rng), d(rng), d(rng), d(rng)};
    const double ka = d(rng), kb = d(rng);
    const Vec lin = read_theta(ka, ScaledMat::column(a + b), 2);
    const Vec sep = read_theta(ka, ScaledMat::column(a), 2) + read_theta(ka, ScaledMat::column(b), 2);
    CHECK(max_abs(lin - sep) <= 1e-14);
    const Vec lk = read_theta(ka + kb, ScaledMat::column(a), 2);
    const Vec sk = read_theta(ka, ScaledMat::column(a), 2) + read_theta(kb, ScaledMat::column(a), 2);
    CHECK(max_abs(lk - sk) <= 1e-14);
  }
}

TEST_CASE("monitor_c1") {
  const EigenBounds id = monitor_c1(Mat::identity(4));
  CHECK(id.lower == doctest::Approx(1.0));
  CHECK(id.upper == doctest::Approx(1.0));
  const EigenBounds dg = monitor_c1(Mat::diagonal(Vec{0.0, 1.0, 2.0, 3.0}));
  CHECK(dg.lower == doctest::Approx(0.0));
  CHECK(dg.upper == doctest::Approx(3.0));
  CHECK_THROWS_AS(monitor_c1(Mat{{1.0, 0.1}, {0.0, 1.0}}), aobs::EstimatorFault);
}

TEST_CASE("monitor_c2") {
  CHECK_THROWS_AS(monitor_c2(nullptr), aobs::GroundTruthRequired);

  const double dt = 1e-3;
  IndependenceMonitor zero(1.0, dt, 2);
  for (int i = 0; i <= 3000; ++i) zero.push(Vec{std::sin(i * dt), 1.0}, 0.0);
  CHECK(monitor_c2(&zero) == Vec{0.0, 0.0});

  // sin 3t · sin 2t integrates to a bounded oscillation, so the window mean is O(1/T).
  for (double T : {10.0, 100.0}) {
    IndependenceMonitor m(T, dt, 1);
    const int n = static_cast<int>(std::llround(3 * T / dt));
    for (int i = 0; i <= n; ++i) m.push(Vec{std::sin(3 * i * dt)}, std::sin(2 * i * dt));
    CHECK(std::abs(monitor_c2(&m)[0]) <= 1.2 / T);
  }
}

TEST_CASE("monitor_c3") {
  const auto c = aobs::drem::AnnihilatorConfig::duffing();
  CHECK(monitor_c3(Mat::identity(4), c.Ht, c.L1).is_zero());
  CHECK(monitor_c3(Mat(4, 4), c.Ht, c.L1).is_zero());
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Mat a = oracle::random_mat(rng, 4, 4);
    const Mat g = a * a.transposed();
    const Mat b = oracle::naive_mul(oracle::naive_mul(c.Ht, oracle::laplace_adjugate(g)), c.L1);
    const double ref = std::abs(oracle::laplace_det(b));
    CHECK(monitor_c3(g, c.Ht, c.L1).to_double() == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("monitor_c4") {
  const ScaledScalar gamma = 50.0, eta = 2.0;
  // ω̇ = 0: γω³ − ηω, positive iff γω² > η.
  CHECK(monitor_c4(gamma, 0.1, 0.0, 123.0, eta).to_double() == doctest::Approx(50e-3 - 0.2));
  CHECK(monitor_c4(gamma, 0.1, 0.0, 123.0, eta).sign() < 0);
  CHECK(monitor_c4(gamma, 0.3, 0.0, -7.0, eta).sign() > 0);
  CHECK(monitor_c4(gamma, 0.0, -0.25, 9.0, eta).to_double() == -0.25);
  const ScaledScalar big = monitor_c4(ScaledScalar::pow10(248), ScaledScalar::pow10(-122), 0.0, 0.0,
                                      ScaledScalar::pow10(-130));
  CHECK(big.exponent10() == -118);
}

TEST_CASE("κ̂ passes through a zero crossing of ω and keeps tracking") {
  EstimatorConfig cfg;
  cfg.gamma = 100.0;
  const GaugedEstimator est(cfg);
  auto omega = [](double t) { return 0.3 + std::sin(t); };
  auto omega_dot = [](double t) { return std::cos(t); };
  const double dt = 1e-3;
  double k = est.initial_k();
  int crossings = 0;
  double worst = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double t = i * dt;
    const double w = omega(t);
    if (i > 0 && (w > 0) != (omega(t - dt) > 0)) ++crossings;
    if (t > 5.0 && std::abs(w) > 0.2) worst = std::max(worst, std::abs(est.kappa(k).to_double() * w - 1.0));
    OmegaSamples smp;
    const double ts[5] = {t, t + dt / 2, t + dt / 2, t + dt, t + dt};
    for (int j = 0; j < 5; ++j) {
      smp.omega[j] = omega(ts[j]);
      smp.omega_dot[j] = omega_dot(ts[j]);
    }
    REQUIRE_NOTHROW(k = est.step(k, smp, dt).next);
  }
  CHECK(crossings >= 5);
  CHECK(worst <= 1e-3);
}
