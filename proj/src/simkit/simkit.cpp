#include "aobs/simkit/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aobs/errors.hpp"

namespace aobs::simkit {

Clock::Clock(double t0, double dt) : t0_(t0), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("Clock: dt must be positive");
  if (!std::isfinite(t0)) throw std::invalid_argument("Clock: t0 must be finite");
}

std::size_t steps_in(double span, double dt) {
  if (!(span > 0.0) || !(dt > 0.0)) throw std::invalid_argument("steps_in: span and dt must be positive");
  const double ratio = span / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
    throw std::invalid_argument("delay " + std::to_string(span) + " is not an integer multiple of dt " +
                                std::to_string(dt));
  return static_cast<std::size_t>(rounded);
}

Vec rk4_step(const VectorField& f, double t, std::span<const double> x, double dt, std::string_view block) {
  const auto guard = [&](const Vec& k, double ts) {
    if (k.size() != x.size()) throw DimensionError("rk4_step: vector field returned wrong size");
    if (!matkit::all_finite(k)) throw IntegrationFault(ts, std::string(block), "non-finite stage value");
  };
  const std::size_t n = x.size();
  Vec tmp(n);
  const Vec k1 = f(t, x);
  guard(k1, t);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const Vec k2 = f(t + 0.5 * dt, tmp);
  guard(k2, t + 0.5 * dt);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const Vec k3 = f(t + 0.5 * dt, tmp);
  guard(k3, t + 0.5 * dt);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  const Vec k4 = f(t + dt, tmp);
  guard(k4, t + dt);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

Rk4Integrator::Rk4Integrator(std::size_t dim, std::function<std::string(std::size_t)> block_of)
    : block_of_(std::move(block_of)), k1_(dim), k2_(dim), k3_(dim), k4_(dim), work_(dim) {}

void Rk4Integrator::check(std::span<const double> k, double t) const {
  for (std::size_t i = 0; i < k.size(); ++i)
    if (!std::isfinite(k[i]))
      throw IntegrationFault(t, block_of_ ? block_of_(i) : "state[" + std::to_string(i) + "]",
                             "non-finite derivative");
}

void Rk4Integrator::step(const StagedField& f, double t, std::span<double> x, double dt) {
  const std::size_t n = x.size();
  if (n != k1_.size()) throw DimensionError("Rk4Integrator: state size changed");
  const double half = 0.5 * dt;
  f(t, x, 0, k1_);
  check(k1_, t);
  for (std::size_t i = 0; i < n; ++i) work_[i] = x[i] + half * k1_[i];
  f(t + half, work_, 1, k2_);
  check(k2_, t + half);
  for (std::size_t i = 0; i < n; ++i) work_[i] = x[i] + half * k2_[i];
  f(t + half, work_, 2, k3_);
  check(k3_, t + half);
  for (std::size_t i = 0; i < n; ++i) work_[i] = x[i] + dt * k3_[i];
  f(t + dt, work_, 3, k4_);
  check(k4_, t + dt);
  for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
}

DelayLine::DelayLine(double delay, double dt, std::size_t width)
    : capacity_(steps_in(delay, dt)),
      width_(width),
      slots_(capacity_ + 1),
      ring_(slots_ * width, 0.0),
      zeros_(width, 0.0) {}

void DelayLine::push(std::span<const double> sample) {
  if (sample.size() != width_) throw DimensionError("DelayLine::push: sample width mismatch");
  const auto slot = static_cast<std::size_t>(next_ % static_cast<std::int64_t>(slots_));
  std::copy(sample.begin(), sample.end(), ring_.begin() + static_cast<std::ptrdiff_t>(slot * width_));
  ++next_;
}

std::span<const double> DelayLine::read_step(std::int64_t step) const {
  if (step < 0) return zeros_;
  if (step >= next_ || step < next_ - static_cast<std::int64_t>(slots_))
    throw std::out_of_range("DelayLine: step " + std::to_string(step) + " is not retained");
  const auto slot = static_cast<std::size_t>(step % static_cast<std::int64_t>(slots_));
  return std::span<const double>(ring_).subspan(slot * width_, width_);
}

FirstOrderFilter::FirstOrderFilter(double gain, std::size_t width) : gain_(gain), state_(width, 0.0) {
  if (!(gain > 0.0)) throw std::invalid_argument("FirstOrderFilter: gain must be positive");
}

void FirstOrderFilter::reset(std::span<const double> state) {
  if (state.size() != state_.size()) throw DimensionError("FirstOrderFilter::reset: width mismatch");
  std::copy(state.begin(), state.end(), state_.begin());
}

void FirstOrderFilter::derivative(double gain, std::span<const double> state, std::span<const double> input,
                                  std::span<double> out) {
  for (std::size_t i = 0; i < state.size(); ++i) out[i] = gain * (input[i] - state[i]);
}

Vec FirstOrderFilter::rhs(std::span<const double> input) const {
  if (input.size() != state_.size()) throw DimensionError("FirstOrderFilter: input width mismatch");
  Vec out(state_.size());
  derivative(gain_, state_, input, out);
  return out;
}

void FirstOrderFilter::step_held(std::span<const double> input, double dt) {
  if (input.size() != state_.size()) throw DimensionError("FirstOrderFilter: input width mismatch");
  const double blend = -std::expm1(-gain_ * dt);
  for (std::size_t i = 0; i < state_.size(); ++i) state_[i] += blend * (input[i] - state_[i]);
}

SlidingWindowIntegral::SlidingWindowIntegral(double window, double dt, std::size_t width)
    : window_(window),
      dt_(dt),
      history_(window, dt, width),
      cumulative_(width, 0.0),
      compensation_(width, 0.0),
      previous_(width, 0.0),
      value_(width, 0.0) {}

void SlidingWindowIntegral::push(std::span<const double> sample) {
  const std::size_t w = cumulative_.size();
  if (sample.size() != w) throw DimensionError("SlidingWindowIntegral: sample width mismatch");
  if (started_) {
    // Kahan-compensated trapezoid accumulation.
    for (std::size_t i = 0; i < w; ++i) {
      const double inc = 0.5 * dt_ * (previous_[i] + sample[i]) - compensation_[i];
      const double next = cumulative_[i] + inc;
      compensation_[i] = (next - cumulative_[i]) - inc;
      cumulative_[i] = next;
    }
  }
  started_ = true;
  std::copy(sample.begin(), sample.end(), previous_.begin());
  history_.push(cumulative_);
  const auto old = history_.read_step(history_.next_step() - 1 - static_cast<std::int64_t>(history_.capacity()));
  for (std::size_t i = 0; i < w; ++i) value_[i] = (cumulative_[i] - old[i]) / window_;
}

}  // namespace aobs::simkit
