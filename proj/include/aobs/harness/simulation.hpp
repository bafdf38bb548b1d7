#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aobs/drem/drem.hpp"
#include "aobs/estimator/estimator.hpp"
#include "aobs/harness/scenario.hpp"
#include "aobs/simkit/simkit.hpp"

namespace aobs::harness {

/// Decimated samples, one row per logged grid point, columns named.
struct TrajectoryLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Throws std::out_of_range for an unknown column.
  std::size_t index(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

/// The whole adaptive observer as one fixed-step system: plant, observer,
/// input filters, α filters, window extension, scalarization filters and the
/// estimator, plus the optional ground-truth disturbance channel.
///
/// Every block advances with the same classical RK4 step. The estimation chain
/// depends on (y, u) only, so each step first advances plant and chain, then κ̂
/// from the recorded stage values of ω and ω̇, then the observer with the
/// recorded stage values of y and θ̂. When the κ̂ channel is not stiff this is
/// exactly one RK4 step of the combined system.
class Simulation {
 public:
  /// Validates the scenario (throws ValidationError).
  explicit Simulation(const Scenario& s);

  /// Advance one step. Throws IntegrationFault carrying time and block.
  void step();

  const Scenario& scenario() const noexcept { return s_; }
  std::int64_t step_index() const noexcept { return clock_.step_index(); }
  double time() const noexcept { return clock_.now(); }

  std::span<const double> x() const { return span(ox_, n_); }
  std::span<const double> xhat() const { return xhat_; }
  const drem::FilterBank& bank() const noexcept { return bank_; }
  std::span<const double> bank_state() const { return span(ob_, bank_.dim()); }
  const drem::AnnihilatorConfig& annihilator() const noexcept { return ann_; }
  const estimator::GaugedEstimator& estimator() const noexcept { return est_; }

  Vec y() const { return cur_.y; }
  double z() const noexcept { return cur_.z; }
  double z_tilde() const noexcept { return cur_.z - u_[oa_]; }
  std::span<const double> phi_stack() const { return cur_.phi_stack; }
  std::span<const double> Y() const { return span(ow_, d_); }
  Mat Phi() const { return Mat::from_flat(d_, d_, span(ow_ + d_, d_ * d_)); }
  Mat omega_f() const { return Mat::from_flat(d_, d_, span(os_, d_ * d_)); }
  std::span<const double> lambda_f() const { return span(os_ + d_ * d_, d_); }

  const drem::FinalRegression& regression() const noexcept { return cur_.reg; }
  const ScaledScalar& omega() const noexcept { return cur_.reg.omega; }
  const ScaledScalar& omega_dot() const noexcept { return cur_.reg.omega_dot; }
  ScaledScalar kappa() const { return est_.kappa(k_); }
  Vec theta_hat() const;
  /// θ̂ as fed to the observer (gated, or the truth in debug mode).
  Vec theta_fed() const;
  Vec delta_hat() const;
  bool gate_open() const noexcept { return gate_open_; }
  bool last_kappa_step_stiff() const noexcept { return last_stiff_; }
  std::size_t stiff_steps() const noexcept { return stiff_steps_; }

  // Ground truth; each throws GroundTruthRequired unless the truth channel is on.
  double w() const;
  double f() const;
  std::span<const double> W() const;
  Vec c2() const;

  estimator::EigenBounds c1() const;
  ScaledScalar c3() const;
  ScaledScalar c4() const;

  std::vector<std::string> log_columns() const;
  /// Current grid point as a log row. Throws IntegrationFault on NaN.
  std::vector<double> log_row() const;

 private:
  struct StageOut {
    Vec y, u;
    double z = 0.0;
    Vec phi_stack;
    double w = 0.0, f = 0.0;
    drem::FinalRegression reg;
  };

  std::span<const double> span(std::size_t off, std::size_t len) const { return {u_.data() + off, len}; }
  void eval(double t, std::span<const double> U, int stage, std::span<double> dU, StageOut& out);
  Vec fed_theta(double k, const drem::FinalRegression& reg) const;
  void check_finite(double t) const;
  void update_gate();

  Scenario s_;
  std::size_t n_, p_, q_, d_;
  simkit::Clock clock_;
  drem::FilterBank bank_;
  drem::AnnihilatorConfig ann_;
  estimator::GaugedEstimator est_;
  observer::ObserverConfig obs_;
  ScaledScalar s_norm_;
  std::size_t window_steps_;
  std::size_t pack_;  // extension sample width (+1 with truth)

  std::size_t ox_, ob_, oa_, ow_, os_, ot_, dim_;
  Vec u_;      // upstream state
  Vec xhat_;
  double k_;   // κ̂ in gauge units
  Vec e0_;     // χ0 − x0
  Vec c_sum_;  // 𝓛C

  simkit::DelayLine delay_;
  Vec packs_;  // extension samples of the current step, one per stage
  std::array<Vec, 4> kst_;
  Vec tmp_;
  StageOut cur_;
  std::array<StageOut, 4> stages_;

  bool gate_open_ = false;
  bool last_stiff_ = false;
  std::size_t stiff_steps_ = 0;
};

/// Steady-state summary computed from a TrajectoryLog alone.
struct MetricsReport {
  double window_start = 0.0, window_end = 0.0;
  double errx_mean = 0.0, errx_max = 0.0;
  double errdelta_mean = 0.0, errdelta_max = 0.0;
  double errtheta_mean = 0.0, errtheta_max = 0.0;
  /// Earliest logged time after which ‖θ̃‖ stays below 0.1 / 0.01 (NaN if never).
  double theta_settle_1e1 = 0.0, theta_settle_1e2 = 0.0;
  double c1_lower_floor = 0.0;
  double log10_c3_floor = 0.0;
  double log10_omega_floor = 0.0, log10_omega_mean = 0.0;
  /// Smallest C4 margin in the window, as sign and log10 of the magnitude.
  double c4_min_sign = 0.0, c4_min_log10_abs = 0.0;
  double c4_negative_fraction = 0.0;

  static std::vector<std::string> names();
  std::vector<double> values() const;
};

/// Metrics over the trailing `steady_fraction` of the logged time span.
MetricsReport compute_metrics(const TrajectoryLog& log, double steady_fraction);

struct RunResult {
  TrajectoryLog log;
  MetricsReport metrics;
  std::size_t stiff_steps = 0;
};

/// Called after every step (and once at t0) with the live simulation.
using StepHook = std::function<void(const Simulation&)>;

/// Integrate the scenario to t_end, logging every `decimation` steps.
RunResult run_scenario(const Scenario& s, const StepHook& hook = {});

}  // namespace aobs::harness
