#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ppsel {

// Bad input: malformed files, inconsistent dimensions, invalid parameters.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Overflow or non-finite values while evaluating the likelihood.
class NumericRangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solver stopped before meeting its tolerance. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last)
        : std::runtime_error(what), last_iterate(std::move(last)) {}

    Eigen::VectorXd last_iterate;
};

// Coordinate descent met a column with zero weighted norm.
class DegenerateColumnError : public std::runtime_error {
public:
    DegenerateColumnError(const std::string& what, std::size_t col)
        : std::runtime_error(what), column(col) {}

    std::size_t column;
};

} // namespace ppsel
