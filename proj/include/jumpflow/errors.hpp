#pragma once

#include <stdexcept>
#include <string>

namespace jumpflow {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested moment integral of a Levy measure is infinite.
struct DivergentMoment : Error {
  using Error::Error;
};

/// A tail sampler was asked to draw from a region with zero mass.
struct EmptyTail : Error {
  using Error::Error;
};

/// A step kernel extends beyond the horizon of the path it is paired with.
struct KernelOutOfHorizon : Error {
  using Error::Error;
};

/// A kernel size set carries infinite Levy mass (touches the origin of an
/// infinite-activity measure).
struct DivergentCompensator : Error {
  using Error::Error;
};

/// A simulated state became NaN or infinite; the path is aborted.
struct NonFiniteState : Error {
  using Error::Error;
};

/// A time requested as a restart/composition point is not a grid node.
struct GridMismatch : Error {
  using Error::Error;
};

/// A Skorohod integrand coefficient depends on jumps inside or after its own
/// rectangle; only adapted step integrands are evaluated pathwise.
struct AdaptednessViolation : Error {
  using Error::Error;
};

/// More than the allowed fraction of Monte Carlo paths aborted.
struct AbortBudgetExceeded : Error {
  using Error::Error;
};

/// Invalid experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace jumpflow
