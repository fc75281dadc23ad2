#pragma once

#include <stdexcept>
#include <string>

namespace amp {

// Base for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated a documented precondition (wrong question kind,
// out-of-range size, malformed input).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Incompatible array shapes in the differentiable core.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

}  // namespace amp
