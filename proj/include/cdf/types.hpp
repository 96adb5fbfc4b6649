#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace cdf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text or document (OBJ, JSON).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Geometry that violates a mesh or field invariant.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during optimization or training.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace cdf
