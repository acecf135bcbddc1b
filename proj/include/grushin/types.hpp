#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace grushin {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;

/// Base class for runtime failures raised by the toolkit (CLI exit code 1).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input configuration or domain description (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A geometric or mesh invariant does not hold.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Perturbation field rejected at construction or while mapping a mesh.
class PerturbationError : public Error {
public:
    using Error::Error;
};

/// Factorization failure or non-convergence in the eigensolver.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Boundary-integral formula requested where the eigenfunction regularity near
/// the degenerate set {x = 0} is not available.
class RegularityGateError : public Error {
public:
    using Error::Error;
};

} // namespace grushin
