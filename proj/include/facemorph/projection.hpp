#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "facemorph/base_mesh.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

/// Per-image map of mesh coordinates into [-1, 1]^2: subtract the bounding
/// box centre, divide by half the longer side.
struct MeshFrame {
  Eigen::RowVector2d center;
  double half_extent;

  static MeshFrame of(const Eigen::MatrixX2d& points);
  Eigen::VectorXd to_features(const Eigen::MatrixX2d& points) const;  // interleaved x0 y0 x1 y1 ...
  Eigen::MatrixX2d from_features(const Eigen::VectorXd& features) const;
};

/// Linear map from a base mesh to the 72-point configuration. Mesh and
/// target coordinates are both expressed in the mesh's own MeshFrame, so the
/// map commutes with translating or scaling the image.
struct ProjectionLayer {
  int mesh_size = 0;
  Eigen::MatrixXd weights;  // 144 x 2M, interleaved coordinates on both sides
  Eigen::VectorXd bias;     // 144
  std::vector<double> loss_curve;

  /// Predicted configuration in the mesh's pixel coordinates.
  LandmarkConfig apply(const BaseMesh& mesh) const;
  /// Prediction in normalized coordinates for normalized features.
  Eigen::VectorXd apply_features(const Eigen::VectorXd& features) const;
};

struct ProjectionTraining {
  int epochs = 150;
  int batch_size = 32;
  double learning_rate = 1e-2;
  double decay = 0.5;
  int decay_every = 50;
  /// Descent runs on whitened features; principal directions with variance
  /// below this fraction of the largest are left out.
  double variance_floor = 1e-3;
  std::uint64_t seed = 0;
};

/// Normalized design data shared by the SGD and closed-form solvers.
struct ProjectionData {
  Eigen::MatrixXd features;  // n x 2M
  Eigen::MatrixXd targets;   // n x 144
};

ProjectionData projection_data(std::span<const BaseMesh> meshes, std::span<const LandmarkConfig> targets);

/// Mini-batch gradient descent on mean squared error. Deterministic given seed.
ProjectionLayer train_projection(std::span<const BaseMesh> meshes, std::span<const LandmarkConfig> targets,
                                 const ProjectionTraining& options = {});

/// Exact minimizer of mean squared error + lambda * ||W||^2 (bias not
/// penalized).
ProjectionLayer solve_projection_ridge(std::span<const BaseMesh> meshes,
                                       std::span<const LandmarkConfig> targets, double lambda = 1e-3);

/// Mean squared error on normalized targets plus lambda * ||W||^2.
double projection_objective(const ProjectionLayer& layer, const ProjectionData& data, double lambda);

}  // namespace facemorph
