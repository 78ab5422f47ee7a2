#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "facemorph/image.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

/// Small CNN predicting the offset from a patch centre to a landmark.
///
///   conv 3x3 (8, valid) -> ReLU -> maxpool 2
///   conv 3x3 (16, valid) -> ReLU -> maxpool 2
///   flatten ++ one-hot(landmark) -> dense 32 -> ReLU -> dense 2
///
/// The output is clamped to +/- patch_size / 2 on each axis. All parameters
/// live in one flat vector so optimizers and gradient checks can treat them
/// uniformly.
class PatchRefiner {
 public:
  static constexpr int kConv1 = 8;
  static constexpr int kConv2 = 16;
  static constexpr int kHidden = 32;

  /// `patch_size` must be odd and at least 11.
  explicit PatchRefiner(int patch_size = 33);

  int patch_size() const { return patch_size_; }
  Eigen::Index parameter_count() const { return params_.size(); }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  /// Offset (dx, dy) in pixels, y down.
  Eigen::Vector2d predict(const Patch& patch, LandmarkIndex index) const;

  /// Squared error ||offset - target||^2 for one sample; adds its gradient
  /// with respect to parameters() into `gradient`.
  double accumulate_gradient(const Patch& patch, LandmarkIndex index, const Eigen::Vector2d& target,
                             Eigen::VectorXd& gradient) const;

  double loss(const Patch& patch, LandmarkIndex index, const Eigen::Vector2d& target) const;

  nlohmann::json to_json() const;
  static PatchRefiner from_json(const nlohmann::json& j);

 private:
  struct Layout {
    int s1, p1, s2, p2, flat;
    Eigen::Index conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b, total;
  };
  struct Activations;

  Activations forward(const Patch& patch, LandmarkIndex index) const;

  int patch_size_;
  Layout layout_;
  Eigen::VectorXd params_;
};

struct RefinerSample {
  std::size_t image;  // index into RefinerDataset::images
  double x = 0.0;     // sampled rough position; the patch sits at its nearest pixel
  double y = 0.0;
  LandmarkIndex index = 1;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();  // truth - (x, y)
};

struct RefinerDataset {
  std::vector<GrayImage> images;
  std::vector<RefinerSample> samples;
};

/// Samples at rough + U(-jitter, jitter) for every landmark, `draws` times per
/// landmark and image.
RefinerDataset build_refiner_dataset(const std::vector<GrayImage>& images,
                                     const std::vector<LandmarkConfig>& rough,
                                     const std::vector<LandmarkConfig>& truth, double jitter, int draws,
                                     std::uint64_t seed);

struct RefinerTraining {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

/// Mini-batch SGD on mean squared offset error. Returns the mean loss of each
/// epoch. Deterministic given the seed.
std::vector<double> train_refiner(PatchRefiner& refiner, const RefinerDataset& data,
                                  const RefinerTraining& options = {});

/// Refined position: the rough position plus the offset predicted from the
/// patch at its nearest pixel. A zero refiner returns `rough` unchanged.
LandmarkConfig refine_landmarks(const PatchRefiner& refiner, const GrayImage& image, const LandmarkConfig& rough);

}  // namespace facemorph
