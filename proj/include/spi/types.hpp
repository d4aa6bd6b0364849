#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace spi {

// Largest supported phase-space dimension (sine-Euler, M = 1).
inline constexpr int kMaxDim = 8;

// Stack-allocated dynamic vectors/matrices: the hot loops never touch the heap.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Violated precondition (bad dimension, out-of-range index, invalid config).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver did not converge.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const State& y) { return y.allFinite(); }

}  // namespace spi
