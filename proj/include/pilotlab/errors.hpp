#pragma once

#include <stdexcept>
#include <string>

namespace pilotlab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NonHermitianInput : Error {
    using Error::Error;
};

struct NonpositiveEigenvalue : Error {
    using Error::Error;
};

struct SingularInput : Error {
    using Error::Error;
};

struct InvalidConfig : Error {
    using Error::Error;
};

/// The constraint set admits no point (e.g. the per-antenna energy cap is
/// too small for the requested accuracy targets). Carries the certificate
/// description produced by the solver.
struct InfeasibleProblem : Error {
    using Error::Error;
};

struct NumericalBreakdown : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct UnknownField : Error {
    using Error::Error;
};

}  // namespace pilotlab
