#pragma once

#include <stdexcept>
#include <string>

namespace swc {

/// Argument outside a function's domain (negative input, or beyond a
/// tabulated grid that was not declared unbounded).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Requested value outside a function's range (inverting past sup f).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical quadrature failed to reach the requested tolerance.
struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A structural assumption of the certificate machinery fails on the given
/// data (e.g. the asymptotic-ratio condition on gamma_c/alpha_o near 0).
struct AssumptionViolation : std::runtime_error {
  explicit AssumptionViolation(const std::string& msg) : std::runtime_error(msg) {}
};

/// A function object could not be assembled with the requested properties.
struct ConstructionError : std::runtime_error {
  explicit ConstructionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent user configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Matrix handed to the Lyapunov solver has an eigenvalue with
/// nonnegative real part.
struct NotHurwitz : std::runtime_error {
  explicit NotHurwitz(const std::string& msg) : std::runtime_error(msg) {}
};

/// Lyapunov solve could not meet the residual target.
struct IllConditioned : std::runtime_error {
  explicit IllConditioned(const std::string& msg) : std::runtime_error(msg) {}
};

/// The dwell-time objective grows without bound: no finite average
/// dwell-time guarantee exists for the given certificates.
struct DivergentBound : std::runtime_error {
  explicit DivergentBound(const std::string& msg) : std::runtime_error(msg) {}
};

/// Simulation reached the jump budget while flow intervals shrank below
/// resolution: accumulation of events suspected.
struct ZenoSuspected : std::runtime_error {
  explicit ZenoSuspected(const std::string& msg) : std::runtime_error(msg) {}
};

/// Integrator produced a non-finite state.
struct StepFailure : std::runtime_error {
  explicit StepFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace swc
