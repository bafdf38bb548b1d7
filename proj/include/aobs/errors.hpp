#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aobs {

/// Operand shapes do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve failed; carries the achieved residual when one exists.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A scaled-exponent value left the representable range of a plain double.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Non-finite value produced while advancing the simulation.
class IntegrationFault : public std::runtime_error {
 public:
  IntegrationFault(double t, std::string block, const std::string& detail = {})
      : std::runtime_error("integration fault at t=" + std::to_string(t) + " in block '" + block +
                           "'" + (detail.empty() ? "" : ": " + detail)),
        t_(t),
        block_(std::move(block)) {}
  double time() const noexcept { return t_; }
  const std::string& block() const noexcept { return block_; }

 private:
  double t_;
  std::string block_;
};

class PlantFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ObserverFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimatorFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested a quantity that only exists when plant ground truth is simulated.
class GroundTruthRequired : public std::logic_error {
 public:
  GroundTruthRequired() : std::logic_error("ground-truth required: enable the truth channel") {}
};

/// Scenario failed validation. Collects every problem found, not just the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "scenario validation failed:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aobs
