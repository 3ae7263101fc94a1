#pragma once

#include <stdexcept>
#include <string>

namespace kgmix {

// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad parameters, configs, or API misuse (shape mismatches, invalid flags).
struct ConfigError : Error {
    using Error::Error;
};

// Problems with input data: missing files, malformed lines, incompatible
// vocabularies, corrupt checkpoints.
struct DataError : Error {
    using Error::Error;
};

// Failures that arise while computing: divergence, non-finite values.
struct ComputeError : Error {
    using Error::Error;
};

}  // namespace kgmix
