#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace camp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Raised when a scalar function is evaluated outside its domain
// (e.g. 1 + V <= 0 for the squared-loss channel).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solver produced a non-finite value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// An iterative solver hit its iteration cap without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace camp
