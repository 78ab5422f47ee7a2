#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "facemorph/landmark_schema.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

template <typename Derived>
Point<typename Derived::Scalar> centroid(const Eigen::MatrixBase<Derived>& config) {
  return config.colwise().mean();
}

template <typename Derived>
Config<typename Derived::Scalar> centered(const Eigen::MatrixBase<Derived>& config) {
  return config.rowwise() - centroid(config);
}

/// Square root of the summed squared distances of the points from their centroid.
template <typename Derived>
typename Derived::Scalar centroid_size(const Eigen::MatrixBase<Derived>& config) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  if (config.rows() < 2) throw DegenerateShapeError("need at least two points");
  const Scalar size = sqrt(centered(config).squaredNorm());
  const Scalar magnitude = config.cwiseAbs().maxCoeff();
  if (!(size > Scalar(1e-12) * (Scalar(1) + magnitude))) {
    throw DegenerateShapeError("configuration has zero centroid size");
  }
  return size;
}

/// Centered copy scaled to unit centroid size.
template <typename Derived>
Config<typename Derived::Scalar> normalized(const Eigen::MatrixBase<Derived>& config) {
  const auto size = centroid_size(config);
  return centered(config) / size;
}

/// Proper rotation R minimizing ||moving * R - reference|| for centered
/// configurations stored one point per row.
template <typename Scalar>
Rotation<Scalar> optimal_rotation(const Config<Scalar>& moving, const Config<Scalar>& reference) {
  const Rotation<Scalar> cross = moving.transpose() * reference;
  Eigen::JacobiSVD<Rotation<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Rotation<Scalar> d = Rotation<Scalar>::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < Scalar(0)) d(1, 1) = Scalar(-1);
  return svd.matrixU() * d * svd.matrixV().transpose();
}

template <typename Scalar>
struct OpaResult {
  Config<Scalar> aligned;  // unit size, centered, rotated onto the reference
  Scalar distance;         // partial Procrustes distance
  Rotation<Scalar> rotation;
};

/// Ordinary Procrustes fit of `moving` onto `reference`: both are centered
/// and scaled to unit centroid size, then `moving` is rotated (no reflection).
template <typename Scalar>
OpaResult<Scalar> opa_align(const Config<Scalar>& moving, const Config<Scalar>& reference) {
  if (moving.rows() != reference.rows()) {
    throw DataError("landmark counts differ: " + std::to_string(moving.rows()) + " vs " +
                    std::to_string(reference.rows()));
  }
  const Config<Scalar> a = normalized(moving);
  const Config<Scalar> b = normalized(reference);
  OpaResult<Scalar> result;
  result.rotation = optimal_rotation<Scalar>(a, b);
  result.aligned = a * result.rotation;
  result.distance = (result.aligned - b).norm();
  return result;
}

template <typename Scalar>
Scalar procrustes_distance(const Config<Scalar>& a, const Config<Scalar>& b) {
  return opa_align<Scalar>(a, b).distance;
}

/// Mirrors the configuration (x -> -x) and exchanges the rows of every
/// bilateral pair. Exact involution.
template <typename Scalar>
Config<Scalar> reflect_relabel(const Config<Scalar>& config, const PairMap& pairs = pair_map()) {
  if (config.rows() != kLandmarkCount) {
    throw DataError("reflect_relabel needs 72 landmarks, got " + std::to_string(config.rows()));
  }
  const auto perm = mirror_permutation(pairs);
  Config<Scalar> out(config.rows(), 2);
  for (Eigen::Index i = 0; i < config.rows(); ++i) {
    const auto src = perm[static_cast<std::size_t>(i)];
    out(i, 0) = -config(src, 0);
    out(i, 1) = config(src, 1);
  }
  return out;
}

template <typename Scalar>
struct GpaOptions {
  Scalar tolerance = Scalar(1e-8);  // mean displacement between iterations
  int max_iterations = 100;
  int slide_rounds = 5;
};

template <typename Scalar>
struct AlignedSample {
  std::vector<Config<Scalar>> configs;
  Config<Scalar> mean;
  int iterations = 0;
  bool converged = false;
  bool slid = false;
  /// Summed squared distance to the consensus after the plain fit and after
  /// each sliding round.
  std::vector<Scalar> ss_history;
};

template <typename Scalar>
Scalar sum_squared_distances(const std::vector<Config<Scalar>>& configs, const Config<Scalar>& mean) {
  Scalar total = Scalar(0);
  for (const auto& c : configs) total += (c - mean).squaredNorm();
  return total;
}

/// Moves each slider point along its (after - before) chord by the projection
/// of its residual to `mean`. Directions are taken before any point moves;
/// rows that are not sliders are left untouched.
template <typename Scalar>
void slide_semilandmarks(std::vector<Config<Scalar>>& configs, const Config<Scalar>& mean,
                         std::span<const SliderTriplet> sliders) {
  for (auto& config : configs) {
    const Config<Scalar> before_slide = config;
    for (const auto& t : sliders) {
      Point<Scalar> chord = before_slide.row(row_of(t.after)) - before_slide.row(row_of(t.before));
      const Scalar length = chord.norm();
      if (!(length > Scalar(0))) continue;
      chord /= length;
      const Point<Scalar> residual = mean.row(row_of(t.slide)) - before_slide.row(row_of(t.slide));
      config.row(row_of(t.slide)) = before_slide.row(row_of(t.slide)) + residual.dot(chord) * chord;
    }
  }
}

namespace detail {

template <typename Scalar>
void fit_to_consensus(AlignedSample<Scalar>& sample, const GpaOptions<Scalar>& options) {
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (auto& c : sample.configs) c = opa_align<Scalar>(c, sample.mean).aligned;
    Config<Scalar> next = Config<Scalar>::Zero(sample.mean.rows(), 2);
    for (const auto& c : sample.configs) next += c;
    next /= Scalar(sample.configs.size());
    next = normalized(next);
    const Scalar shift = (next - sample.mean).norm();
    sample.mean = std::move(next);
    sample.iterations += 1;
    if (shift < options.tolerance) {
      sample.converged = true;
      break;
    }
  }
  // Final pass so every config is aligned to the reported mean.
  for (auto& c : sample.configs) c = opa_align<Scalar>(c, sample.mean).aligned;
}

}  // namespace detail

/// Generalized Procrustes analysis with optional sliding semilandmarks
/// (minimum Procrustes distance criterion).
template <typename Scalar>
AlignedSample<Scalar> gpa(const std::vector<Config<Scalar>>& configs,
                          std::span<const SliderTriplet> sliders = {},
                          const GpaOptions<Scalar>& options = {}) {
  if (configs.size() < 2) throw DataError("GPA needs at least two configurations");
  const auto rows = configs.front().rows();
  AlignedSample<Scalar> sample;
  sample.configs.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs[i].rows() != rows) {
      throw DataError("configuration " + std::to_string(i) + " has " +
                      std::to_string(configs[i].rows()) + " landmarks, expected " +
                      std::to_string(rows));
    }
    try {
      sample.configs.push_back(normalized(configs[i]));
    } catch (const DegenerateShapeError&) {
      throw DegenerateShapeError("configuration " + std::to_string(i) + " is degenerate");
    }
  }
  for (const auto& t : sliders) {
    for (auto index : {t.before, t.slide, t.after}) {
      if (index < 1 || index > rows) throw DataError("slider index out of range");
    }
  }
  sample.mean = sample.configs.front();
  detail::fit_to_consensus(sample, options);
  sample.ss_history.push_back(sum_squared_distances(sample.configs, sample.mean));

  if (!sliders.empty()) {
    for (int round = 0; round < options.slide_rounds; ++round) {
      slide_semilandmarks(sample.configs, sample.mean, sliders);
      for (auto& c : sample.configs) c = normalized(c);
      detail::fit_to_consensus(sample, options);
      sample.ss_history.push_back(sum_squared_distances(sample.configs, sample.mean));
    }
    sample.slid = true;
  }
  return sample;
}

}  // namespace facemorph
