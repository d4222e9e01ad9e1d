#ifndef RCBO_TYPES_HPP
#define RCBO_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rcbo {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One column per particle: a d x N block. Columns are contiguous, so a
// particle can be handed to an objective as a plain vector without copying.
template <typename Scalar>
using Particles = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ConstVectorRef = Eigen::Ref<const Vector<Scalar>>;

using VectorXd = Vector<double>;
using ParticlesXd = Particles<double>;

// Error hierarchy. ConfigError covers invalid user input (exit status 1 at
// the command line); NumericalError covers failures during simulation
// (exit status 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ConfigError {
public:
    DimensionMismatch(Index expected, Index got)
        : ConfigError("dimension mismatch: expected " + std::to_string(expected) +
                      ", got " + std::to_string(got)) {}
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NonFinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateGradient : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RejectionBudgetExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientReplicas : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OracleNonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline void require_dimension(Index expected, Index got)
{
    if (expected != got) throw DimensionMismatch(expected, got);
}

} // namespace rcbo

#endif // RCBO_TYPES_HPP
