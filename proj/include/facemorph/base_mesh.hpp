#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace facemorph {

/// Dense per-face point set from an auxiliary detector, pixel coordinates (y down).
struct BaseMesh {
  Eigen::MatrixX2d points;
  std::string image_name;
  int image_width = 0;
  int image_height = 0;

  Eigen::Index size() const { return points.rows(); }
};

/// Mesh file: {"image", "width", "height", "points": [[x, y], ...]}.
std::string mesh_to_json(const BaseMesh& mesh);
BaseMesh mesh_from_json(std::string_view text);

}  // namespace facemorph
