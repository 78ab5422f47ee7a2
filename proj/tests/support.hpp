#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "facemorph/shape_geometry.hpp"
#include "facemorph/types.hpp"

namespace facemorph::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("facemorph_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline LandmarkConfig random_config(std::mt19937_64& rng, Eigen::Index rows = kLandmarkCount, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  LandmarkConfig c(rows, 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = n(rng);
  return c;
}

inline Rotation<double> rotation(double angle) {
  Rotation<double> r;
  r << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
  return r;
}

/// c * R * scale + shift, points as rows.
inline LandmarkConfig similarity(const LandmarkConfig& c, double angle, double scale, double dx, double dy) {
  LandmarkConfig out = scale * (c * rotation(angle));
  out.col(0).array() += dx;
  out.col(1).array() += dy;
  return out;
}

}  // namespace facemorph::testing
