#pragma once

#include <stdexcept>
#include <string>

namespace kbl {

// Bad user input: malformed config, unknown keys, invalid parameter ranges.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical routine left its validated regime (cross-checks disagree,
// quadrature fallback exhausted, ...).
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solver hit its iteration cap; carries the last residual so
// callers can report it instead of silently returning a bad answer.
class nonconvergence_error : public numeric_error {
public:
    nonconvergence_error(const std::string& what, double residual, int iterations)
        : numeric_error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

} // namespace kbl
