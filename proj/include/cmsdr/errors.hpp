#pragma once

#include <stdexcept>
#include <string>

namespace cmsdr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument, dimension mismatch, violated precondition.
struct ValueError : Error {
    using Error::Error;
};

// Malformed external input (alist text, JSON problem files, configs).
struct ParseError : Error {
    using Error::Error;
};

// GF(2) rank deficiency where full rank is required.
struct RankError : Error {
    using Error::Error;
};

// Randomized construction failed after its retry budget.
struct GenerationError : Error {
    using Error::Error;
};

// Solver-side breakdowns: singular KKT systems, failed factorizations,
// diverging iterations.
struct NumericalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace cmsdr
