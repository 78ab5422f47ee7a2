#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "facemorph/patch_refiner.hpp"

namespace facemorph::testing {

struct GradientCheck {
  int probes = 0;
  int failures = 0;
  double worst = 0.0;  // largest relative error seen
};

/// Compares backprop against central differences for every parameter of
/// `refiner` on one sample. Relative error |a - b| / max(|a|, |b|); a pair of
/// exact zeros counts as agreement.
inline void check_gradient(PatchRefiner& refiner, const Patch& patch, LandmarkIndex index,
                           const Eigen::Vector2d& target, double h, double tolerance, GradientCheck& out) {
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(refiner.parameter_count());
  refiner.accumulate_gradient(patch, index, target, analytic);
  auto& theta = refiner.parameters();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double saved = theta(k);
    theta(k) = saved + h;
    const double up = refiner.loss(patch, index, target);
    theta(k) = saved - h;
    const double down = refiner.loss(patch, index, target);
    theta(k) = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max(std::abs(numeric), std::abs(analytic(k)));
    const double rel = scale == 0.0 ? 0.0 : std::abs(numeric - analytic(k)) / scale;
    out.probes += 1;
    out.worst = std::max(out.worst, rel);
    if (!(rel < tolerance)) out.failures += 1;
  }
}

/// Random small network and sample for gradient checks. Weights are scaled up
/// so the output is not clamped and ReLUs are mixed on and off.
inline GradientCheck random_gradient_check(int patch_size, std::uint64_t seed, double h, double tolerance) {
  PatchRefiner refiner(patch_size);
  refiner.initialize(seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.1);
  for (Eigen::Index k = 0; k < refiner.parameter_count(); ++k) refiner.parameters()(k) += n(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Patch patch(patch_size, patch_size);
  for (Eigen::Index k = 0; k < patch.size(); ++k) patch.data()[k] = u(rng);
  std::uniform_int_distribution<int> landmark(1, 72);
  const Eigen::Vector2d target(4.0 * u(rng) - 2.0, 4.0 * u(rng) - 2.0);
  GradientCheck out;
  check_gradient(refiner, patch, landmark(rng), target, h, tolerance, out);
  return out;
}

}  // namespace facemorph::testing
