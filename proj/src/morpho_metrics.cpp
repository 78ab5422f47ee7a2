#include "facemorph/morpho_metrics.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace facemorph {

std::vector<double> distinctiveness(const AlignedSample<double>& sample) {
  std::vector<double> out;
  out.reserve(sample.configs.size());
  for (const auto& c : sample.configs) out.push_back(procrustes_distance<double>(c, sample.mean));
  return out;
}

double asymmetry_score(const LandmarkConfig& config, const PairMap& pairs) {
  const LandmarkConfig mirrored = reflect_relabel<double>(config, pairs);
  // Both fit directions, so the score of the mirror image is bitwise the same.
  return 0.5 * (procrustes_distance<double>(config, mirrored) + procrustes_distance<double>(mirrored, config));
}

std::vector<double> asymmetry(const AlignedSample<double>& sample, const PairMap& pairs) {
  std::vector<double> out;
  out.reserve(sample.configs.size());
  for (const auto& c : sample.configs) out.push_back(asymmetry_score(c, pairs));
  return out;
}

AnovaTable repeatability(const std::vector<std::vector<LandmarkConfig>>& replicates,
                         std::span<const SliderTriplet> sliders, const GpaOptions<double>& options) {
  const auto k = replicates.size();
  if (k < 2) throw DataError("repeatability needs at least two replicates");
  const auto n = replicates.front().size();
  for (std::size_t j = 1; j < k; ++j) {
    if (replicates[j].size() != n) {
      throw DataError("replicate sizes differ: " + std::to_string(n) + " vs " +
                      std::to_string(replicates[j].size()));
    }
  }
  if (n < 2) throw DataError("repeatability needs at least two individuals");

  std::vector<LandmarkConfig> all;
  all.reserve(k * n);
  for (const auto& rep : replicates) all.insert(all.end(), rep.begin(), rep.end());
  const auto sample = gpa<double>(all, sliders, options);
  const auto& x = sample.configs;
  const auto rows = x.front().rows();

  LandmarkConfig grand = LandmarkConfig::Zero(rows, 2);
  for (const auto& c : x) grand += c;
  grand /= static_cast<double>(x.size());

  AnovaTable table;
  table.individuals = static_cast<int>(n);
  table.replicates = static_cast<int>(k);
  for (std::size_t i = 0; i < n; ++i) {
    LandmarkConfig individual = LandmarkConfig::Zero(rows, 2);
    for (std::size_t j = 0; j < k; ++j) individual += x[j * n + i];
    individual /= static_cast<double>(k);
    table.ss_among += static_cast<double>(k) * (individual - grand).squaredNorm();
    for (std::size_t j = 0; j < k; ++j) {
      table.ss_within += (x[j * n + i] - individual).squaredNorm();
      table.ss_total += (x[j * n + i] - grand).squaredNorm();
    }
  }
  table.df_among = static_cast<int>(n) - 1;
  table.df_within = static_cast<int>(n * (k - 1));
  table.ms_among = table.ss_among / table.df_among;
  table.ms_within = table.ss_within / table.df_within;
  table.var_among = std::max(0.0, (table.ms_among - table.ms_within) / static_cast<double>(k));
  table.var_within = table.ms_within;
  table.repeatability = table.ms_within > 0.0
                            ? table.var_among / (table.var_among + table.ms_within)
                            : 1.0;
  return table;
}

AnovaTable repeatability(const ReplicatePair& pair, std::span<const SliderTriplet> sliders,
                         const GpaOptions<double>& options) {
  if (pair.rep1.size() != pair.rep2.size()) {
    throw DataError("replicates hold " + std::to_string(pair.rep1.size()) + " and " +
                    std::to_string(pair.rep2.size()) + " specimens");
  }
  std::vector<std::vector<LandmarkConfig>> reps(2);
  for (const auto& s : pair.rep1) reps[0].push_back(s.landmarks);
  for (const auto& s : pair.rep2) reps[1].push_back(s.landmarks);
  return repeatability(reps, sliders, options);
}

Correlation fisher_ci(double r, int n, double level) {
  if (n < 4) throw DataError("correlation interval needs n >= 4");
  if (!(level > 0.0 && level < 1.0)) throw DataError("confidence level must lie in (0, 1)");
  constexpr double kEdge = 1.0 - 1e-12;
  const double z = std::atanh(std::clamp(r, -kEdge, kEdge));
  const boost::math::normal_distribution<double> normal;
  const double z_crit = boost::math::quantile(normal, 1.0 - (1.0 - level) / 2.0);
  const double se = 1.0 / std::sqrt(static_cast<double>(n - 3));

  Correlation out;
  out.r = r;
  out.n = n;
  out.level = level;
  out.lo = std::tanh(z - z_crit * se);
  out.hi = std::tanh(z + z_crit * se);
  const double df = n - 2;
  if (std::abs(r) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t_distribution<double> student(df);
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(student, std::abs(t)));
  }
  return out;
}

Correlation pearson_ci(std::span<const double> x, std::span<const double> y, double level) {
  if (x.size() != y.size()) throw DataError("correlation inputs differ in length");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 4) throw DataError("correlation needs at least four pairs");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd dx = xv.array() - xv.mean();
  const Eigen::VectorXd dy = yv.array() - yv.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("correlation undefined for a constant input");
  const double r = std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
  return fisher_ci(r, static_cast<int>(n), level);
}

double chi2_2df_radius(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DataError("contour level must lie in (0, 1)");
  return std::sqrt(-2.0 * std::log1p(-level));
}

double LogCovariance::mahalanobis(double x, double y) const {
  const Eigen::Vector2d d = Eigen::Vector2d(std::log(x), std::log(y)) - center;
  return std::sqrt(d.dot(cov.inverse() * d));
}

std::vector<Eigen::Vector2d> LogCovariance::outline(double radius, int segments) const {
  const Eigen::Matrix2d l = cov.llt().matrixL();
  std::vector<Eigen::Vector2d> points;
  points.reserve(static_cast<std::size_t>(segments));
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * std::numbers::pi * i / segments;
    points.push_back(center + radius * l * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  return points;
}

LogCovariance log_cov_ellipses(std::span<const double> x, std::span<const double> y,
                               std::span<const double> levels) {
  if (x.size() != y.size()) throw DataError("inputs differ in length");
  if (x.size() < 3) throw DataError("need at least three points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixX2d logs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto xi = x[static_cast<std::size_t>(i)];
    const auto yi = y[static_cast<std::size_t>(i)];
    if (!(xi > 0.0) || !(yi > 0.0)) {
      throw DataError("value at position " + std::to_string(i) + " is not positive; log undefined");
    }
    logs(i, 0) = std::log(xi);
    logs(i, 1) = std::log(yi);
  }
  LogCovariance out;
  out.center = logs.colwise().mean().transpose();
  const Eigen::MatrixX2d d = logs.rowwise() - out.center.transpose();
  out.cov = d.transpose() * d / static_cast<double>(n - 1);
  out.r = out.cov(0, 1) / std::sqrt(out.cov(0, 0) * out.cov(1, 1));

  static constexpr double kDefaultLevels[] = {0.5, 0.9, 0.99};
  if (levels.empty()) levels = kDefaultLevels;
  for (double level : levels) out.contours.push_back({level, chi2_2df_radius(level)});
  return out;
}

}  // namespace facemorph
