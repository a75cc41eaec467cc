#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace actuopt {

/// Caller passed inconsistent or out-of-domain arguments.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A problem instance cannot be set up (singular implicit system, invalid parameters).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An actuator design lies outside the region where its support fits in the domain.
class ProjectionRequired : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Picard iteration stopped contracting.
class ContractionFailure : public std::runtime_error {
 public:
  ContractionFailure(const std::string& what, std::vector<double> distances)
      : std::runtime_error(what), distances_(std::move(distances)) {}

  const std::vector<double>& distances() const noexcept { return distances_; }

 private:
  std::vector<double> distances_;
};

/// A non-finite state appeared during time integration. Local mild solutions
/// can blow up in finite time, so this is a legitimate outcome of a run.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, int step, std::vector<Eigen::VectorXd> partial)
      : std::runtime_error(what), step_(step), partial_(std::move(partial)) {}

  /// Index of the first time node whose state was non-finite.
  int step() const noexcept { return step_; }
  /// Finite states computed before the failure (nodes 0..step-1).
  const std::vector<Eigen::VectorXd>& partial() const noexcept { return partial_; }

 private:
  int step_;
  std::vector<Eigen::VectorXd> partial_;
};

}  // namespace actuopt
