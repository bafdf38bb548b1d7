#pragma once

#include <span>
#include <string>
#include <vector>

#include "aobs/matkit/mat.hpp"
#include "aobs/plant/plant.hpp"

namespace aobs::observer {

using matkit::Mat;
using matkit::Vec;

/// Gains of the high-gain adaptive observer.
struct ObserverConfig {
  Mat L;       // n×p output-injection gain; A + L·C must be Hurwitz
  Mat M;       // s×p disturbance gain
  double mu = 1.0;
  Vec xhat0;

  std::vector<std::string> problems(const plant::KnownStructure& known) const;
};

/// Duffing gains: L = −[30.5749; 64.3579], M = 28.644, μ = 25, x̂0 = 0.
ObserverConfig duffing_observer();

/// δ̂ = −μ·M·(C·x̂ − y). Algebraic in (x̂, y); never integrated.
Vec disturbance_estimate(const ObserverConfig& cfg, const Mat& C, std::span<const double> xhat,
                         std::span<const double> y);

/// dx̂/dt = A·x̂ + φ(y,u) + G(y,u)·θ̂ + D·δ̂ + L·(ŷ − y), with ŷ = C·x̂.
/// Throws ObserverFault on non-finite results.
Vec observer_rhs(const plant::KnownStructure& known, const ObserverConfig& cfg, double t,
                 std::span<const double> xhat, std::span<const double> y, std::span<const double> u,
                 std::span<const double> theta_hat);

/// Residuals of the output-matching conditions
///   (A+LC)ᵀP + P(A+LC) = −Q,   DᵀP = M·C.
struct MatchingReport {
  double lyapunov_residual = 0.0;  // spectral norm
  double matching_residual = 0.0;  // spectral norm
  bool p_positive = false;
  bool q_positive = false;
  bool pass = false;
};

MatchingReport verify_matching(const Mat& A, const Mat& C, const Mat& D, const Mat& L, const Mat& P,
                               const Mat& Q, const Mat& M);

struct MatchingSuggestion {
  Mat P, Q, M;
  double residual = 0.0;           // ‖DᵀP − M·C‖
  double relative_residual = 0.0;  // residual / ‖DᵀP‖
};

/// Grid search over Q = diag(q), each qᵢ on a log grid over [1e−2, 1e2] (four
/// points per decade). P solves the Lyapunov equation, M = DᵀP·C†, and the
/// candidate with the smallest relative residual wins. The residual is always
/// returned; an infeasible structure shows up as a residual near 1, never as
/// silence. Throws SolverError when A + L·C is not Hurwitz.
MatchingSuggestion suggest_matching(const Mat& A, const Mat& C, const Mat& D, const Mat& L);

}  // namespace aobs::observer
