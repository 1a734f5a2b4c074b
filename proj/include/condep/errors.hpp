#pragma once

#include <stdexcept>
#include <string>

namespace condep {

// Error taxonomy; the CLI maps these onto exit codes.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inadmissible parameter values (copula theta out of range, unattainable
// dependence targets, Fisher transform outside (-1,1), ...).
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Factorization failures, quadrature non-convergence, degenerate weights.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace condep
