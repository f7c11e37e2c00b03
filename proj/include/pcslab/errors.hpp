#pragma once

#include <stdexcept>
#include <string>

namespace pcslab {

/// Caller violated a precondition (wrong length, empty input, mismatched alphabet).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematically admissible range.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Iterative numerics failed to converge.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Amplitude sequence does not carry the codec's composition.
struct CompositionError : ContractError {
  using ContractError::ContractError;
};

/// Sequence ranks at or beyond 2^k, so no k-bit input produces it.
struct OutOfImageError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Invalid link, grid or experiment configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace pcslab
