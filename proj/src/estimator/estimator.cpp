#include "aobs/estimator/estimator.hpp"

#include <cmath>

#include "aobs/errors.hpp"
#include "aobs/matkit/linalg.hpp"

namespace aobs::estimator {

using namespace matkit;

namespace {

constexpr std::int64_t kExponentLimit = 600;

void guard(const ScaledScalar& v, const char* what) {
  if (!v.is_zero() && v.exponent10() > kExponentLimit)
    throw EstimatorFault(std::string("estimator: ") + what + " = " + v.to_string() + " exceeds 1e600");
}

}  // namespace

std::vector<std::string> EstimatorConfig::problems() const {
  std::vector<std::string> p;
  if (gamma.sign() <= 0) p.push_back("estimator gamma must be positive");
  if (eta.sign() <= 0) p.push_back("estimator eta must be positive");
  if (!std::isfinite(gate_threshold)) p.push_back("estimator gate threshold must be finite");
  return p;
}

ScaledScalar estimator_rhs(const ScaledScalar& gamma, const ScaledScalar& kappa, const ScaledScalar& omega,
                           const ScaledScalar& omega_dot) {
  const ScaledScalar gw = gamma * omega;
  guard(gw, "γ·ω");
  const ScaledScalar wk = omega * kappa;
  guard(wk, "ω·κ̂");
  const ScaledScalar track = gw * (wk - 1.0);
  guard(track, "γ·ω·(ω·κ̂ − 1)");
  const ScaledScalar drift = omega_dot * kappa * kappa;
  guard(drift, "ω̇·κ̂²");
  return -track - drift;
}

Vec read_theta(const ScaledScalar& kappa, const ScaledMat& Lambda, std::size_t q) {
  if (Lambda.rows() < q || Lambda.cols() != 1) throw DimensionError("read_theta: Lambda must be a column of at least q entries");
  Vec theta(q);
  for (std::size_t i = 0; i < q; ++i) theta[i] = (kappa * Lambda.at(i, 0)).to_double_checked("theta estimate");
  return theta;
}

GaugedEstimator::GaugedEstimator(const EstimatorConfig& cfg) : gamma_(cfg.gamma) {
  if (gamma_.sign() <= 0) throw std::invalid_argument("estimator gamma must be positive");
  g_ = static_cast<std::int64_t>(std::llround(gamma_.log10_abs() / 2.0));
  gamma_g_ = gamma_.times_pow10(-2 * g_);
  k0_ = cfg.kappa0.times_pow10(-g_).to_double_checked("initial kappa in gauge units");
}

double GaugedEstimator::rhs(double k, const ScaledScalar& omega, const ScaledScalar& omega_dot) const {
  return estimator_rhs(gamma_g_, k, omega.times_pow10(g_), omega_dot.times_pow10(g_))
      .to_double_checked("kappa derivative in gauge units");
}

namespace {

// ε after time tau under ε̇ = −p̄ε − r̄ε².
double bernoulli(double eps, double p, double r, double tau) {
  const double P = p * tau;
  const double decay = std::exp(-P);
  const double gain = P == 0.0 ? tau : -std::expm1(-P) / p;
  const double den = 1.0 + eps * r * gain;
  if (!(den > 0.0)) throw EstimatorFault("estimator: κ̂ escapes in finite time within a stiff step");
  return eps * decay / den;
}

}  // namespace

KappaStep GaugedEstimator::step(double k, const OmegaSamples& s, double h) const {
  double w[5], wd[5];
  bool stiff = false;
  const double gamma = gamma_g_.to_double_checked("gamma in gauge units");
  for (int i = 0; i < 5; ++i) {
    w[i] = s.omega[i].times_pow10(g_).to_double_checked("omega in gauge units");
    wd[i] = s.omega_dot[i].times_pow10(g_).to_double_checked("omega rate in gauge units");
    if (i < 4 && h * gamma * w[i] * w[i] > 0.5) stiff = true;
  }
  KappaStep out;
  out.stiff = stiff;
  if (!stiff && std::abs(k * w[0]) > 0.5) {
    // Tracking: integrate ξ = 1/κ̂, for which ξ̇ = ω̇ + γωξ(ω − ξ) stays regular when ω crosses zero.
    auto f = [&](double x, int i) { return wd[i] + gamma * w[i] * x * (w[i] - x); };
    const double x0 = 1.0 / k;
    const double d0 = f(x0, 0);
    const double x1 = x0 + 0.5 * h * d0;
    const double d1 = f(x1, 1);
    const double x2 = x0 + 0.5 * h * d1;
    const double d2 = f(x2, 2);
    const double x3 = x0 + h * d2;
    const double d3 = f(x3, 3);
    out.stage[0] = k;
    out.stage[1] = 1.0 / x1;
    out.stage[2] = 1.0 / x2;
    out.stage[3] = 1.0 / x3;
    out.next = 1.0 / (x0 + h / 6.0 * (d0 + 2.0 * d1 + 2.0 * d2 + d3));
    return out;
  }
  if (!stiff) {
    const double d0 = rhs(k, s.omega[0], s.omega_dot[0]);
    out.stage[0] = k;
    out.stage[1] = k + 0.5 * h * d0;
    const double d1 = rhs(out.stage[1], s.omega[1], s.omega_dot[1]);
    out.stage[2] = k + 0.5 * h * d1;
    const double d2 = rhs(out.stage[2], s.omega[2], s.omega_dot[2]);
    out.stage[3] = k + h * d2;
    const double d3 = rhs(out.stage[3], s.omega[3], s.omega_dot[3]);
    out.next = k + h / 6.0 * (d0 + 2.0 * d1 + 2.0 * d2 + d3);
    return out;
  }

  for (int i = 1; i < 5; ++i)
    if ((w[i] > 0.0) != (w[0] > 0.0) || w[i] == 0.0)
      throw EstimatorFault("estimator: ω changes sign within a stiff step");
  double p[5], r[5];
  for (int i = 0; i < 5; ++i) {
    r[i] = wd[i] / w[i];
    p[i] = gamma * w[i] * w[i] + r[i];
  }
  const double eps0 = w[0] * k - 1.0;
  const double e1 = bernoulli(eps0, 0.5 * (p[0] + p[1]), 0.5 * (r[0] + r[1]), 0.5 * h);
  const double e2 = bernoulli(eps0, 0.5 * (p[0] + p[2]), 0.5 * (r[0] + r[2]), 0.5 * h);
  const double pm = 0.5 * (p[1] + p[2]), rm = 0.5 * (r[1] + r[2]);
  const double e3 = bernoulli(eps0, (p[0] + 4.0 * pm + p[4]) / 6.0, (r[0] + 4.0 * rm + r[4]) / 6.0, h);
  out.stage[0] = k;
  out.stage[1] = (1.0 + e1) / w[1];
  out.stage[2] = (1.0 + e2) / w[2];
  out.stage[3] = (1.0 + e3) / w[3];
  out.next = (1.0 + e3) / w[4];
  return out;
}

EigenBounds monitor_c1(const Mat& gram) {
  if (!gram.is_square()) throw DimensionError("monitor_c1: Gram must be square");
  const double scale = std::max(1.0, max_abs(gram));
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = i + 1; j < gram.cols(); ++j)
      if (std::abs(gram(i, j) - gram(j, i)) > 1e-9 * scale)
        throw EstimatorFault("monitor_c1: window Gram is not symmetric");
  const auto e = symmetric_eigen(gram, 30);
  return {e.values.front(), e.values.back()};
}

IndependenceMonitor::IndependenceMonitor(double window, double dt, std::size_t width)
    : integral_(window, dt, width), buf_(width) {}

void IndependenceMonitor::push(std::span<const double> phi, double f) {
  for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] = phi[i] * f;
  integral_.push(buf_);
}

Vec monitor_c2(const IndependenceMonitor* monitor) {
  if (monitor == nullptr) throw GroundTruthRequired();
  const auto v = monitor->value();
  return Vec(v.begin(), v.end());
}

ScaledScalar monitor_c3(const Mat& gram, const Mat& Ht, const Mat& L1) {
  const ScaledMat adj = adjugate(ScaledMat::from(gram));
  return det(ScaledMat::from(Ht) * adj * ScaledMat::from(L1)).abs();
}

ScaledScalar monitor_c4(const ScaledScalar& gamma, const ScaledScalar& omega, const ScaledScalar& omega_dot,
                        const ScaledScalar& kappa, const ScaledScalar& eta) {
  return gamma * omega * omega * omega + omega * omega_dot * kappa + omega_dot - eta * omega;
}

}  // namespace aobs::estimator
