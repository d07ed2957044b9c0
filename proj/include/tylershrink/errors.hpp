#pragma once

#include <stdexcept>
#include <string>

namespace tylershrink {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The fixed-point iteration did not reach the requested tolerance.
struct NonConvergence : Error {
    int iterations;
    double residual;
    NonConvergence(int iters, double resid)
        : Error("fixed-point iteration did not converge after " + std::to_string(iters) +
                " iterations (residual " + std::to_string(resid) + ")"),
          iterations(iters),
          residual(resid) {}
};

// A sample vector is identically zero, so its quadratic-form weight is undefined.
struct ZeroSample : Error {
    explicit ZeroSample(int index)
        : Error("sample " + std::to_string(index) + " is the zero vector") {}
};

// The shrinkage parameter lies outside the admissible range.
struct RhoOutOfRange : Error {
    using Error::Error;
};

// A scalar root bracket could not be established (invalid rho or degenerate spectrum).
struct BracketFailure : Error {
    using Error::Error;
};

// A variance denominator is non-positive; inputs are outside the theory's validity.
struct DegenerateDenominator : Error {
    using Error::Error;
};

// A simulation-only quantity was requested from a dataset without ground truth.
struct MissingTruth : Error {
    MissingTruth() : Error("dataset carries no ground-truth z_i / tau_i") {}
};

// Every grid point of a shrinkage sweep failed.
struct AllPointsFailed : Error {
    AllPointsFailed() : Error("all shrinkage grid points failed") {}
};

// Estimate matrix unusable for a quadratic form (defensive; cannot occur for valid fits).
struct SingularEstimate : Error {
    using Error::Error;
};

// Configuration file violates the per-command schema.
struct SchemaError : Error {
    using Error::Error;
};

// File system failure (missing input, unwritable output).
struct IoError : Error {
    using Error::Error;
};

}  // namespace tylershrink
