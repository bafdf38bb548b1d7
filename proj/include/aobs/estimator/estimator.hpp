#pragma once

#include <span>
#include <string>
#include <vector>

#include "aobs/matkit/mat.hpp"
#include "aobs/matkit/scaled.hpp"
#include "aobs/simkit/simkit.hpp"

namespace aobs::estimator {

using matkit::Mat;
using matkit::ScaledMat;
using matkit::ScaledScalar;
using matkit::Vec;

struct EstimatorConfig {
  ScaledScalar gamma = ScaledScalar::pow10(248);
  ScaledScalar kappa0 = 0.0;
  ScaledScalar eta = ScaledScalar::pow10(-130);  // C4 monitor only
  /// θ̂ reaches the observer only once the C1 lower bound has exceeded this;
  /// values ≤ 0 disable gating.
  double gate_threshold = 0.0;

  std::vector<std::string> problems() const;
};

/// κ̂̇ = −γω(ωκ̂ − 1) − ω̇κ̂², formed in scaled arithmetic. Throws
/// EstimatorFault if an intermediate product exceeds 10^600.
ScaledScalar estimator_rhs(const ScaledScalar& gamma, const ScaledScalar& kappa, const ScaledScalar& omega,
                           const ScaledScalar& omega_dot);

/// θ̂ = κ̂·𝓛₀Λ, i.e. κ̂ times the first q entries of Λ. Throws OverflowError if
/// the result leaves the double range.
Vec read_theta(const ScaledScalar& kappa, const ScaledMat& Lambda, std::size_t q);

/// ω and ω̇ at the four RK4 stage points of a step (t, t+h/2, t+h/2, t+h) and
/// at the accepted state at t+h.
struct OmegaSamples {
  ScaledScalar omega[5];
  ScaledScalar omega_dot[5];
};

struct KappaStep {
  double stage[4] = {0, 0, 0, 0};  // k at the RK4 stage points, for θ̂ fed downstream
  double next = 0.0;
  bool stiff = false;
};

/// κ̂ carried as k·10^g with g = round(log10 γ / 2), so that k is O(1) when
/// γω² is O(1). In these units the law keeps its form with γ·10^−2g, ω·10^g
/// and ω̇·10^g, and k can be integrated as an ordinary double.
class GaugedEstimator {
 public:
  explicit GaugedEstimator(const EstimatorConfig& cfg);

  std::int64_t gauge() const noexcept { return g_; }
  const ScaledScalar& gamma() const noexcept { return gamma_; }
  double initial_k() const { return k0_; }
  ScaledScalar kappa(double k) const { return ScaledScalar(k).times_pow10(g_); }
  /// dk/dt.
  double rhs(double k, const ScaledScalar& omega, const ScaledScalar& omega_dot) const;
  /// Advance k over one step of length h. Ordinary RK4 while h·γω² ≤ 0.5 at
  /// every stage, taken on 1/k once |kω| > 0.5 so a zero crossing of ω is
  /// passed through instead of escaping. Above that the law is stiff, and ε = ωκ̂ − 1 is advanced with
  /// the exact solution of ε̇ = −pε − rε² (p = γω² + ω̇/ω, r = ω̇/ω) under
  /// step-averaged p and r. The equilibrium ε = 0 is then kept exactly.
  KappaStep step(double k, const OmegaSamples& s, double h) const;
  Vec theta(double k, const ScaledMat& Lambda, std::size_t q) const { return read_theta(kappa(k), Lambda, q); }

 private:
  ScaledScalar gamma_;
  ScaledScalar gamma_g_;
  std::int64_t g_;
  double k0_;
};

// Monitors. None of them feeds back into the estimate.

struct EigenBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Extreme eigenvalues of the symmetric window Gram. Throws EstimatorFault when
/// the matrix is asymmetric beyond 1e-9 relative to its largest entry.
EigenBounds monitor_c1(const Mat& gram);

/// (1/T)∫ φᵢ·f over the clipped window, per element. f is the regression
/// disturbance, which only exists when the plant truth is simulated.
class IndependenceMonitor {
 public:
  IndependenceMonitor(double window, double dt, std::size_t width);
  void push(std::span<const double> phi, double f);
  std::span<const double> value() const noexcept { return integral_.value(); }

 private:
  simkit::SlidingWindowIntegral integral_;
  Vec buf_;
};

/// Values of an independence monitor; throws GroundTruthRequired when none exists.
Vec monitor_c2(const IndependenceMonitor* monitor);

/// |det(𝓗ᵀ·adj(Gram)·𝓛₁)|.
ScaledScalar monitor_c3(const Mat& gram, const Mat& Ht, const Mat& L1);

/// γω³ + ωω̇κ̂ + ω̇ − ηω.
ScaledScalar monitor_c4(const ScaledScalar& gamma, const ScaledScalar& omega, const ScaledScalar& omega_dot,
                        const ScaledScalar& kappa, const ScaledScalar& eta);

}  // namespace aobs::estimator
