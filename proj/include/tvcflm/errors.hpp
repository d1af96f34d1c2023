#pragma once

#include <stdexcept>
#include <string>

namespace tvcflm {

/// Malformed or out-of-contract input (bad domain, wrong dimensions, schema violations).
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure failed (non-convergence, divergence, degenerate data).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tvcflm
