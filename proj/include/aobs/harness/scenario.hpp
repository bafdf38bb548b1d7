#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aobs/estimator/estimator.hpp"
#include "aobs/matkit/mat.hpp"
#include "aobs/matkit/scaled.hpp"
#include "aobs/observer/observer.hpp"
#include "aobs/plant/plant.hpp"

namespace aobs::harness {

using matkit::Mat;
using matkit::ScaledScalar;
using matkit::Vec;

struct DremSpec {
  Mat K;
  double alpha = 0.1;
  double T = 30.0;
  double k = 1.0;
  std::size_t m = 1;
  Mat L1t;  // 2m×2q, 0/1
  Mat Ht;   // 2m×2q
  Vec chi0;
  ScaledScalar s_norm = 1.0;
};

struct ClockSpec {
  double t0 = 0.0;
  double dt = 1e-3;
  double t_end = 300.0;
};

struct OutputSpec {
  std::string csv;          // empty: no trajectory file
  std::string metrics;      // empty: no metrics file
  std::size_t decimation = 100;
  bool plot_script = false;
  double steady_fraction = 0.2;
};

struct SweepSpec {
  std::string param;
  std::vector<std::string> values;
};

struct Scenario {
  std::string name = "scenario";
  plant::PlantModel plant;
  observer::ObserverConfig observer;
  DremSpec drem;
  estimator::EstimatorConfig estimator;
  ClockSpec clock;
  OutputSpec output;
  SweepSpec sweep;
  /// Simulate the ground-truth disturbance channels (δ_f, w, W, C2).
  bool truth = false;
  /// Feed the true θ to the observer instead of θ̂.
  bool feed_true_theta = false;

  /// Every problem found; empty when the scenario can run.
  std::vector<std::string> problems() const;
  /// Throws ValidationError when problems() is not empty.
  void validate() const;

  std::size_t total_steps() const;
  std::size_t window_steps() const;
};

/// Duffing oscillator with the reference gains and A_amp = amplitude.
Scenario duffing_scenario(double amplitude = 2.5);

/// Parse a YAML scenario. Keys that are absent keep the Duffing defaults.
/// Relative output paths resolve against `base_dir`. Throws ValidationError
/// listing every malformed entry.
Scenario parse_scenario(const std::string& yaml_text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Parameters accepted by sweeps and by set_param.
const std::vector<std::string>& sweep_params();
/// Set T, A_amp, mu, gamma, k or alpha from text. A_amp is the amplitude of the
/// first sinusoid of the first input channel. Throws ValidationError.
void set_param(Scenario& s, const std::string& param, const std::string& value);

/// Human-readable summary of the configuration (used by `check`).
std::string describe(const Scenario& s);

}  // namespace aobs::harness
