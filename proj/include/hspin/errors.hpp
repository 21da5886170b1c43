// Error taxonomy shared by all modules.
//
// Conventions:
//  - invalid parameter combinations          -> DomainError
//  - sizes exceeding hard implementation caps -> CapacityError
//  - non-convergent series / integrals        -> DivergenceError (carries diagnostics)
//  - root finders failing to bracket/converge -> NumericError (carries bracket state)
//  - quantities undefined at/beyond criticality -> CriticalityError
//
// Monte Carlo precision problems and RG blow-ups are *results*, not exceptions:
// estimates carry a warning flag, flow results carry a blow-up report.

#pragma once

#include <stdexcept>
#include <string>

namespace hspin {

struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct CriticalityError : std::runtime_error {
  explicit CriticalityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hspin
