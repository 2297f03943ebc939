#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dvi {

// Base class for all solver errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration file invalid: unknown key, bad value, violated invariant.
// The message names the offending key or field.
struct ConfigError : Error {
    using Error::Error;
};

// A density mode was requested that the coefficient functions do not support
// (e.g. closed-form density with non-constant coefficients).
struct ModeMismatch : Error {
    using Error::Error;
};

// Symmetrizing density failed validation: non-positive values, or the
// consistency residual A grad(rho) - rho*mu exceeds tolerance.
struct InvalidDensity : Error {
    using Error::Error;
};

// Discrete operator violates a structural invariant (M-matrix sign pattern,
// symmetry, non-positive diffusion) or the grid is unusable.
struct AssemblyError : Error {
    using Error::Error;
};

// Inner Newton iteration for one penalized slice failed to converge.
struct PenaltyDivergence : Error {
    PenaltyDivergence(const std::string& msg, std::size_t slice)
        : Error(msg), slice_index(slice) {}
    std::size_t slice_index;
};

// Time-stepping produced NaN/Inf or a slice system lost diagonal dominance.
struct SchemeError : Error {
    using Error::Error;
};

// Two-obstacle outer iteration exceeded its iteration budget, or the
// monotonicity invariant failed beyond rounding tolerance.
struct GameDivergence : Error {
    using Error::Error;
};

}  // namespace dvi
