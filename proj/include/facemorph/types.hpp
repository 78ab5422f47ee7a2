#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace facemorph {

/// Number of points in the facial landmark configuration.
inline constexpr int kLandmarkCount = 72;

/// An ordered set of 2D points, one row per landmark.
template <typename Scalar>
using Config = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 1, 2>;

template <typename Scalar>
using Rotation = Eigen::Matrix<Scalar, 2, 2>;

using LandmarkConfig = Config<double>;
using Point2d = Point<double>;

/// Landmark indices are 1-based everywhere outside of matrix row access.
using LandmarkIndex = int;

inline constexpr Eigen::Index row_of(LandmarkIndex index) { return index - 1; }

/// Input data is malformed or inconsistent (bad file contents, wrong counts).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A geometric operation received a configuration with no extent.
class DegenerateShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace facemorph
