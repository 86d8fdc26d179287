#pragma once

#include <stdexcept>
#include <string>

namespace dppfl {

/// Shape or layout mismatch between operands.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value outside the domain an operation accepts (labels, k, sizes, ...).
class ValueError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical routine failed (e.g. eigen-solver did not converge, kernel rank too low).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dppfl
