#include "facemorph/base_mesh.hpp"

#include <cmath>

#include <json.hpp>

#include "facemorph/types.hpp"

namespace facemorph {

std::string mesh_to_json(const BaseMesh& mesh) {
  nlohmann::json points = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mesh.points.rows(); ++i) {
    points.push_back({mesh.points(i, 0), mesh.points(i, 1)});
  }
  nlohmann::json doc = {{"image", mesh.image_name},
                        {"width", mesh.image_width},
                        {"height", mesh.image_height},
                        {"points", std::move(points)}};
  return doc.dump() + "\n";
}

BaseMesh mesh_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("mesh file is not valid JSON: ") + e.what());
  }
  try {
    BaseMesh mesh;
    mesh.image_name = doc.at("image").get<std::string>();
    mesh.image_width = doc.at("width").get<int>();
    mesh.image_height = doc.at("height").get<int>();
    const auto& points = doc.at("points");
    if (!points.is_array() || points.empty()) throw DataError("mesh has no points");
    mesh.points.resize(static_cast<Eigen::Index>(points.size()), 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!p.is_array() || p.size() != 2) throw DataError("mesh point " + std::to_string(i) + " is not [x, y]");
      mesh.points(static_cast<Eigen::Index>(i), 0) = p[0].get<double>();
      mesh.points(static_cast<Eigen::Index>(i), 1) = p[1].get<double>();
    }
    if (!mesh.points.allFinite()) throw DataError("mesh has non-finite points");
    if (mesh.image_width <= 0 || mesh.image_height <= 0) throw DataError("mesh image size must be positive");
    return mesh;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed mesh file: ") + e.what());
  }
}

}  // namespace facemorph
