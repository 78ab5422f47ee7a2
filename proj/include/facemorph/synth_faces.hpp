#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facemorph/base_mesh.hpp"
#include "facemorph/image.hpp"
#include "facemorph/morpho_metrics.hpp"
#include "facemorph/tps_io.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

/// Multipliers around 1 applied to the template face.
struct ShapeCoefficients {
  double jaw_width = 1.0;
  double face_height = 1.0;
  double eye_spacing = 1.0;
  double eye_size = 1.0;
  double iris_radius = 1.0;
  double mouth_width = 1.0;
  double brow_arch = 1.0;
  double nose_width = 1.0;
};

/// Similarity placing the face frame onto the canvas (about the canvas centre).
struct Pose {
  double angle = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;
  double scale = 1.0;
};

struct FaceParams {
  ShapeCoefficients shape;
  /// Per-landmark displacement in the face frame (pixels). Each facial
  /// feature (eye, brow, nose, mouth) moves rigidly by the field's mean over
  /// it. Of the remainder only components a viewer could see are used: curve
  /// points move along their normal, iris points follow the pupil,
  /// constructed midpoints are recomputed.
  LandmarkConfig asymmetry = LandmarkConfig::Zero(kLandmarkCount, 2);
  Pose pose;
  double pixel_noise_sd = 3.0;
  double mesh_jitter_sd = 1.0;
  int mesh_size = 468;
  std::uint64_t seed = 0;

  /// Throws DataError when a multiplier leaves [0.5, 2] or the iris would not
  /// fit inside the eye.
  void validate() const;
};

struct SyntheticFace {
  std::string name;
  GrayImage image;
  BaseMesh mesh;
  LandmarkConfig truth;  // pixel coordinates, y down
  FaceParams params;
};

/// The 72-point face in its own frame (origin at the face centre, y down),
/// mirror-symmetric about x = 0.
LandmarkConfig face_template(const ShapeCoefficients& shape = {});

/// Adds the visible part of `field` to `base` and re-derives constructed points.
LandmarkConfig apply_asymmetry(const LandmarkConfig& base, const LandmarkConfig& field);

/// Face-frame anchor positions of the dense mesh.
Eigen::MatrixX2d mesh_template(int mesh_size);

/// M x 72 map from landmark coordinates to mesh coordinates (same map for x
/// and y; rows sum to one). It reproduces only the smooth cubic part of a
/// landmark configuration.
Eigen::MatrixXd mesh_generating_map(int mesh_size);

/// Renders one face. Throws DataError if the posed landmarks leave the canvas.
SyntheticFace generate_face(const FaceParams& params, int canvas = 256, std::string name = "face");

struct PopulationOptions {
  int canvas = 256;
  int mesh_size = 468;
  double pixel_noise_sd = 3.0;
  double mesh_jitter_sd = 1.0;
  /// Local detail displacement SD per unit of spread, in pixels.
  double detail_per_spread = 30.0;
  /// Per-point share of the detail SD; the rest moves whole features.
  double point_detail = 0.3;
};

inline constexpr double kDefaultSpread = 0.1;

std::vector<SyntheticFace> generate_population(int n, double spread, std::uint64_t seed,
                                               const PopulationOptions& options = {});

/// Ground truth as TPS specimens (y up), IMAGE= set to "<name>.pgm".
std::vector<Specimen> truth_specimens(const std::vector<SyntheticFace>& faces);

/// rep1 = truths; rep2 = truths plus isotropic Gaussian landmark noise.
ReplicatePair make_replicates(const std::vector<Specimen>& truths, double noise_sd, std::uint64_t seed);

/// Replicate noise SD (coordinate units) for make_replicates at which the
/// ANOVA's within-individual variance is `ratio` times the among-individual
/// component of `truths`.
double calibrated_noise_sd(const std::vector<LandmarkConfig>& truths, double ratio);

/// Within/among variance ratio whose ICC is 0.97.
inline constexpr double kCalibratedNoiseRatio = 0.031;

}  // namespace facemorph
