#pragma once

#include <stdexcept>
#include <string>

namespace fhtnet {

/// Bad argument to a library operation (out-of-range index, wrong size, ...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A request that would exceed a hard resource guard (e.g. oracle matrices above p=6).
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally incompatible tensors / layer shapes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad key, unparsable value, constraint violation).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometrically degenerate input (e.g. all lines parallel in a least-squares fit).
struct DegenerateInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file contents. `offset` is the byte position where parsing failed, -1 if unknown.
struct FormatError : std::runtime_error {
    long long offset;
    explicit FormatError(const std::string& msg, long long off = -1)
        : std::runtime_error(off >= 0 ? msg + " (at byte " + std::to_string(off) + ")" : msg),
          offset(off) {}
};

/// Filesystem-level failure (missing file, unwritable path).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure during training (NaN/inf loss).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// API misuse (e.g. backward before forward, mismatched list lengths).
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace fhtnet
