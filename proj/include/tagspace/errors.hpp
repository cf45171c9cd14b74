#pragma once

#include <stdexcept>
#include <string>

namespace tagspace {

// Bad input files, malformed lines, referential problems.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated preconditions or inconsistent shapes/configs.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where finiteness is required.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query tokens that resolve to nothing.
struct QueryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tagspace
