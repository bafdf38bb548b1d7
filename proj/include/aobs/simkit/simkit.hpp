#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aobs/matkit/mat.hpp"

namespace aobs::simkit {

using matkit::Vec;

/// Fixed-step clock. The current time is always t0 + step_index·dt, never an
/// accumulated sum, so long runs do not drift.
class Clock {
 public:
  Clock(double t0, double dt);

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  std::int64_t step_index() const noexcept { return step_; }
  double now() const noexcept { return time_at(step_); }
  double time_at(std::int64_t step) const noexcept { return t0_ + static_cast<double>(step) * dt_; }

  void advance() noexcept { ++step_; }
  void set_step(std::int64_t step) noexcept { step_ = step; }

 private:
  double t0_;
  double dt_;
  std::int64_t step_ = 0;
};

/// Number of steps spanning `span` at step `dt`; throws unless span/dt is an
/// integer to 1e-9 relative.
std::size_t steps_in(double span, double dt);

using VectorField = std::function<Vec(double t, std::span<const double> x)>;

/// One classical Runge–Kutta step. Throws IntegrationFault naming `block` if a
/// stage evaluation is not finite.
Vec rk4_step(const VectorField& f, double t, std::span<const double> x, double dt,
             std::string_view block = "state");

/// Vector field that also learns which RK4 stage (0..3) is being evaluated.
/// Stages 1 and 2 share the time t + dt/2.
using StagedField = std::function<void(double t, std::span<const double> x, int stage, std::span<double> dx)>;

/// Reusable RK4 driver for a large monolithic state; work buffers are kept
/// between steps.
class Rk4Integrator {
 public:
  /// `block_of` maps a state index to the name of the block owning it; used
  /// only to label faults.
  explicit Rk4Integrator(std::size_t dim, std::function<std::string(std::size_t)> block_of = {});

  void step(const StagedField& f, double t, std::span<double> x, double dt);

 private:
  void check(std::span<const double> k, double t) const;

  std::function<std::string(std::size_t)> block_of_;
  Vec k1_, k2_, k3_, k4_, work_;
};

/// Ring buffer of fixed-width vector samples, one per clock step, that can
/// return the sample exactly `capacity` steps old.
class DelayLine {
 public:
  DelayLine(double delay, double dt, std::size_t width);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t width() const noexcept { return width_; }
  /// Step index the next push is recorded under.
  std::int64_t next_step() const noexcept { return next_; }

  void push(std::span<const double> sample);
  /// Sample of age `capacity` relative to `now`; zeros while that age reaches
  /// before t0 (the signal is taken as absent there).
  std::span<const double> read(const Clock& now) const { return read_step(now.step_index() - capacity_i()); }
  /// Sample recorded at `step`; zeros for negative steps.
  std::span<const double> read_step(std::int64_t step) const;

 private:
  std::int64_t capacity_i() const noexcept { return static_cast<std::int64_t>(capacity_); }

  std::size_t capacity_;
  std::size_t width_;
  std::size_t slots_;
  std::vector<double> ring_;
  std::vector<double> zeros_;
  std::int64_t next_ = 0;
};

/// gain/(s + gain) applied elementwise; unit DC gain.
class FirstOrderFilter {
 public:
  FirstOrderFilter(double gain, std::size_t width);

  double gain() const noexcept { return gain_; }
  std::span<const double> state() const noexcept { return state_; }
  void reset(std::span<const double> state);

  /// d(state)/dt = gain·(input − state), written into `out`.
  static void derivative(double gain, std::span<const double> state, std::span<const double> input,
                         std::span<double> out);
  Vec rhs(std::span<const double> input) const;
  /// Exact advance over dt for an input held constant across the step.
  void step_held(std::span<const double> input, double dt);

 private:
  double gain_;
  Vec state_;
};

/// Running (1/T)∫ over the clipped window [max(t0, t−T), t] of a fixed-step
/// stream, by trapezoidal accumulation minus a delayed copy of the accumulator.
/// Before t0+T the partial integral is still divided by the full T.
class SlidingWindowIntegral {
 public:
  SlidingWindowIntegral(double window, double dt, std::size_t width);

  /// Append the sample for the next grid point (the first push is t0).
  void push(std::span<const double> sample);
  std::span<const double> value() const noexcept { return value_; }
  double window() const noexcept { return window_; }

 private:
  double window_;
  double dt_;
  DelayLine history_;
  Vec cumulative_;
  Vec compensation_;
  Vec previous_;
  Vec value_;
  bool started_ = false;
};

}  // namespace aobs::simkit
