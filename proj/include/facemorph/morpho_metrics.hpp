#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "facemorph/landmark_schema.hpp"
#include "facemorph/shape_geometry.hpp"
#include "facemorph/tps_io.hpp"

namespace facemorph {

/// Two digitizations of the same faces in matching order (e.g. raw automatic
/// output and its human-corrected counterpart).
struct ReplicatePair {
  std::vector<Specimen> rep1;
  std::vector<Specimen> rep2;
};

/// Procrustes ANOVA of individuals x replicates.
struct AnovaTable {
  int individuals = 0;
  int replicates = 0;
  double ss_among = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;  // about the grand mean
  int df_among = 0;
  int df_within = 0;
  double ms_among = 0.0;
  double ms_within = 0.0;
  double var_among = 0.0;   // clamped at zero
  double var_within = 0.0;  // = ms_within
  double repeatability = 0.0;
};

/// Procrustes distance of each aligned specimen from the consensus.
std::vector<double> distinctiveness(const AlignedSample<double>& sample);

/// Procrustes distance between a configuration and its reflected, relabelled
/// copy. Equal for a configuration and its mirror image.
double asymmetry_score(const LandmarkConfig& config, const PairMap& pairs = pair_map());

/// asymmetry_score of each aligned specimen.
std::vector<double> asymmetry(const AlignedSample<double>& sample, const PairMap& pairs = pair_map());

/// Joint fit of every replicate, then sums of squares in that single frame.
/// `replicates[j][i]` is replicate j of individual i.
AnovaTable repeatability(const std::vector<std::vector<LandmarkConfig>>& replicates,
                         std::span<const SliderTriplet> sliders = {},
                         const GpaOptions<double>& options = {});
AnovaTable repeatability(const ReplicatePair& pair, std::span<const SliderTriplet> sliders = {},
                         const GpaOptions<double>& options = {});

struct Correlation {
  double r = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double p_value = 1.0;  // two-sided t test, n - 2 df
  int n = 0;
  double level = 0.95;
};

/// Fisher-z interval tanh(atanh(r) +- z_crit / sqrt(n - 3)).
Correlation fisher_ci(double r, int n, double level = 0.95);

/// Pearson correlation with its Fisher-z interval. Throws DataError for
/// n < 4, mismatched lengths or a constant input.
Correlation pearson_ci(std::span<const double> x, std::span<const double> y, double level = 0.95);

struct ContourEllipse {
  double level;
  double radius;  // Mahalanobis radius, chi-square with 2 df
};

/// Bivariate normal summary of (ln x, ln y).
struct LogCovariance {
  Eigen::Vector2d center;
  Eigen::Matrix2d cov;
  double r = 0.0;
  std::vector<ContourEllipse> contours;

  double mahalanobis(double x, double y) const;  // of the raw (positive) pair
  /// Boundary of one contour in log space, `segments` points.
  std::vector<Eigen::Vector2d> outline(double radius, int segments = 100) const;
};

double chi2_2df_radius(double level);

LogCovariance log_cov_ellipses(std::span<const double> x, std::span<const double> y,
                               std::span<const double> levels = {});

}  // namespace facemorph
