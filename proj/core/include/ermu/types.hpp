#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ermu {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for malformed inputs (dimension mismatches, unknown enum names,
/// out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The projected-gradient solver produced a non-finite objective.
class SolverDiverged : public std::runtime_error {
 public:
  SolverDiverged(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class LinearSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ermu
