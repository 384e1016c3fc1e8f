#pragma once

#include <stdexcept>
#include <string>

namespace ppde {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Mismatched grids, invalid parameters, exceeded depth caps.
struct ConfigurationError : Error {
    using Error::Error;
};

// A time could not be placed on the grid within tolerance.
struct PrecisionError : Error {
    using Error::Error;
};

}  // namespace ppde
