#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aobs/matkit/mat.hpp"
#include "aobs/plant/expr.hpp"

namespace aobs::plant {

using matkit::Mat;
using matkit::Vec;

/// amplitude · sin(frequency·t + phase), or cos when `wave` is Cos.
struct Sinusoid {
  enum class Wave { Sin, Cos };
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  Wave wave = Wave::Sin;
};

/// One scalar channel: constant + Σ sinusoids.
struct SignalChannel {
  double constant = 0.0;
  std::vector<Sinusoid> terms;

  double value(double t) const noexcept;
  double derivative(double t) const noexcept;
};

/// Vector-valued time signal built from sinusoid-sum channels.
class Signal {
 public:
  Signal() = default;
  explicit Signal(std::vector<SignalChannel> channels) : channels_(std::move(channels)) {}
  static Signal zero(std::size_t width) { return Signal(std::vector<SignalChannel>(width)); }

  std::size_t width() const noexcept { return channels_.size(); }
  const std::vector<SignalChannel>& channels() const noexcept { return channels_; }
  Vec operator()(double t) const;
  void eval_into(double t, std::span<double> out) const noexcept;
  Vec derivative(double t) const;

 private:
  std::vector<SignalChannel> channels_;
};

/// Known nonlinear maps φ(y,u) ∈ ℝⁿ and G(y,u) ∈ ℝ^{n×q}, one expression per entry.
class OutputMaps {
 public:
  OutputMaps() = default;
  OutputMaps(std::size_t n, std::size_t q, std::vector<Expr> phi, std::vector<Expr> g);

  std::size_t n() const noexcept { return n_; }
  std::size_t q() const noexcept { return q_; }
  const std::vector<Expr>& phi_exprs() const noexcept { return phi_; }
  const std::vector<Expr>& g_exprs() const noexcept { return g_; }

  void phi_into(std::span<const double> y, std::span<const double> u, std::span<double> out) const;
  void g_into(std::span<const double> y, std::span<const double> u, Mat& out) const;
  Vec phi(std::span<const double> y, std::span<const double> u) const;
  Mat g(std::span<const double> y, std::span<const double> u) const;
  bool phi_is_zero() const noexcept { return phi_zero_; }

 private:
  std::size_t n_ = 0;
  std::size_t q_ = 0;
  std::vector<Expr> phi_;
  std::vector<Expr> g_;  // row-major n×q
  bool phi_zero_ = true;
};

/// Everything about the plant that the observer and the regressor filters are
/// allowed to know: the linear part and the nonlinear maps. The true parameter
/// vector, the disturbance and the initial state are not in here.
struct KnownStructure {
  Mat A;  // n×n
  Mat C;  // p×n
  Mat D;  // n×s
  OutputMaps maps;

  std::size_t n() const noexcept { return A.rows(); }
  std::size_t p() const noexcept { return C.rows(); }
  std::size_t s() const noexcept { return D.cols(); }
  std::size_t q() const noexcept { return maps.q(); }
};

/// The simulated truth: ẋ = A·x + φ(y,u) + G(y,u)·θ + D·δ(t), y = C·x.
struct PlantModel {
  KnownStructure known;
  Vec theta_true;  // only the metrics layer reads this
  Signal delta;    // width s
  Signal input;    // width m
  Vec x0;

  std::size_t m() const noexcept { return input.width(); }
  /// Every dimensional inconsistency, as human-readable messages.
  std::vector<std::string> problems() const;
};

/// Duffing oscillator with cubic stiffness, θ = [1, 3], x0 = [2, 1],
/// δ(t) = 0.5·sin(2t), u(t) = amplitude·cos(t).
PlantModel duffing_preset(double amplitude = 2.5);

/// ẋ for the plant at (t, x). Throws PlantFault when φ or G is not finite.
Vec plant_rhs(const PlantModel& model, double t, std::span<const double> x);

/// y = C·x
Vec output(const KnownStructure& known, std::span<const double> x);

}  // namespace aobs::plant
