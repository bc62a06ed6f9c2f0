#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cpme {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense Gram matrix. Rows index the first point set, columns the second.
using GramMatrix = Eigen::MatrixXd;

/// Raised for invalid arguments, configurations, and malformed input files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a linear-algebra step cannot be completed (factorization
/// failure, singular systems, non-finite intermediate values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace cpme
