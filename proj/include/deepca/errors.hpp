#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepca {

// ============================================================================
// Error types
//
// One exception type per failure mode so callers can react to exactly the
// condition they care about. Everything derives from Error, which callers
// can catch when they only want "this library failed" granularity.
// ============================================================================

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape misuse: combining matrices or tensors whose dimensions do not fit.
struct DimensionMismatch : Error {
    using Error::Error;
};

// QR hit a pivot column whose norm underflows the rank threshold.
struct RankDeficient : Error {
    using Error::Error;
};

// The symmetric eigensolver was handed a matrix that is not symmetric
// within tolerance.
struct NotSymmetric : Error {
    using Error::Error;
};

// An iterative kernel ran out of its sweep budget before reaching its
// convergence threshold.
struct NoConvergence : Error {
    using Error::Error;
};

// Random graph sampling exhausted its retry budget without producing a
// connected graph.
struct NotConnectable : Error {
    using Error::Error;
};

// A dataset line could not be parsed; `line` is 1-based.
struct ParseError : Error {
    ParseError(std::size_t line_number, const std::string& what)
        : Error("line " + std::to_string(line_number) + ": " + what),
          line(line_number) {}
    std::size_t line;
};

// A dataset does not hold enough samples for the requested partition.
struct InsufficientSamples : Error {
    InsufficientSamples(std::size_t needed_samples, std::size_t available_samples)
        : Error("need " + std::to_string(needed_samples) + " samples, dataset has " +
                std::to_string(available_samples)),
          needed(needed_samples),
          available(available_samples) {}
    std::size_t needed;
    std::size_t available;
};

// Theory bounds need a strict spectral gap at the target rank.
struct GapViolation : Error {
    using Error::Error;
};

// Theory bounds divide by the (k+1)-th eigenvalue; it must be positive.
struct ZeroEigenvalue : Error {
    using Error::Error;
};

// A config file is missing, malformed, or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// Reading or writing an artifact (trace, manifest, edge list) failed.
struct IoError : Error {
    using Error::Error;
};

} // namespace deepca
