#include "facemorph/projection.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>

namespace facemorph {

MeshFrame MeshFrame::of(const Eigen::MatrixX2d& points) {
  const Eigen::RowVector2d lo = points.colwise().minCoeff();
  const Eigen::RowVector2d hi = points.colwise().maxCoeff();
  const double half = 0.5 * (hi - lo).maxCoeff();
  if (!(half > 0.0)) throw DegenerateShapeError("mesh has zero extent");
  return {0.5 * (lo + hi), half};
}

Eigen::VectorXd MeshFrame::to_features(const Eigen::MatrixX2d& points) const {
  Eigen::VectorXd out(2 * points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(2 * i) = (points(i, 0) - center.x()) / half_extent;
    out(2 * i + 1) = (points(i, 1) - center.y()) / half_extent;
  }
  return out;
}

Eigen::MatrixX2d MeshFrame::from_features(const Eigen::VectorXd& features) const {
  Eigen::MatrixX2d out(features.size() / 2, 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out(i, 0) = center.x() + half_extent * features(2 * i);
    out(i, 1) = center.y() + half_extent * features(2 * i + 1);
  }
  return out;
}

Eigen::VectorXd ProjectionLayer::apply_features(const Eigen::VectorXd& features) const {
  return weights * features + bias;
}

LandmarkConfig ProjectionLayer::apply(const BaseMesh& mesh) const {
  if (mesh.size() != mesh_size) {
    throw DataError("mesh has " + std::to_string(mesh.size()) + " points, model expects " +
                    std::to_string(mesh_size));
  }
  const auto frame = MeshFrame::of(mesh.points);
  return frame.from_features(apply_features(frame.to_features(mesh.points)));
}

ProjectionData projection_data(std::span<const BaseMesh> meshes, std::span<const LandmarkConfig> targets) {
  if (meshes.size() != targets.size()) {
    throw DataError("got " + std::to_string(meshes.size()) + " meshes but " + std::to_string(targets.size()) +
                    " target configurations");
  }
  if (meshes.size() < 2) throw DataError("projection training needs at least two examples");
  const auto m = meshes.front().size();
  const auto p = targets.front().rows();
  ProjectionData data;
  data.features.resize(static_cast<Eigen::Index>(meshes.size()), 2 * m);
  data.targets.resize(static_cast<Eigen::Index>(meshes.size()), 2 * p);
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (meshes[i].size() != m) throw DataError("mesh " + std::to_string(i) + " has a different size");
    if (targets[i].rows() != p) throw DataError("target " + std::to_string(i) + " has a different size");
    const auto frame = MeshFrame::of(meshes[i].points);
    const auto row = static_cast<Eigen::Index>(i);
    data.features.row(row) = frame.to_features(meshes[i].points).transpose();
    data.targets.row(row) = frame.to_features(targets[i]).transpose();
  }
  return data;
}

namespace {

/// Centring and whitening of the training features (1/n covariance).
struct Whitening {
  Eigen::VectorXd mean;    // 2M
  Eigen::MatrixXd basis;   // k x 2M

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const {
    return (features.rowwise() - mean.transpose()) * basis.transpose();
  }
};

Whitening whitening_of(const Eigen::MatrixXd& features, double variance_floor) {
  Whitening w;
  const auto n = static_cast<double>(features.rows());
  w.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - w.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd variance = svd.singularValues().array().square() / n;
  if (variance.size() == 0 || !(variance(0) > 0.0)) throw DegenerateShapeError("training meshes do not vary");
  Eigen::Index keep = 0;
  while (keep < variance.size() && variance(keep) >= variance_floor * variance(0) &&
         variance(keep) > 1e-14 * variance(0)) {
    ++keep;
  }
  w.basis = (svd.matrixV().leftCols(keep) * variance.head(keep).cwiseSqrt().cwiseInverse().asDiagonal()).transpose();
  return w;
}

}  // namespace

ProjectionLayer train_projection(std::span<const BaseMesh> meshes, std::span<const LandmarkConfig> targets,
                                 const ProjectionTraining& options) {
  if (options.epochs < 1 || options.batch_size < 1 || !(options.learning_rate > 0.0)) {
    throw DataError("invalid projection training options");
  }
  const auto data = projection_data(meshes, targets);
  const auto whitening = whitening_of(data.features, options.variance_floor);
  const Eigen::MatrixXd z = whitening.apply(data.features);
  const auto n = z.rows();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(data.targets.cols(), z.cols());
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(data.targets.cols());
  ProjectionLayer layer;
  layer.mesh_size = static_cast<int>(data.features.cols() / 2);

  std::mt19937_64 rng(options.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double lr = options.learning_rate;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (epoch > 0 && options.decay_every > 0 && epoch % options.decay_every == 0) lr *= options.decay;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const auto count = std::min<Eigen::Index>(options.batch_size, n - start);
      Eigen::MatrixXd zb(count, z.cols());
      Eigen::MatrixXd yb(count, data.targets.cols());
      for (Eigen::Index k = 0; k < count; ++k) {
        const auto src = order[static_cast<std::size_t>(start + k)];
        zb.row(k) = z.row(src);
        yb.row(k) = data.targets.row(src);
      }
      const Eigen::MatrixXd err = ((zb * weights.transpose()).rowwise() + bias.transpose()) - yb;
      epoch_loss += err.squaredNorm();
      // d/dW of mean_b ||err_b||^2
      weights -= lr * (2.0 / count) * err.transpose() * zb;
      bias -= lr * (2.0 / count) * err.colwise().sum().transpose();
    }
    layer.loss_curve.push_back(epoch_loss / static_cast<double>(n));
  }
  layer.weights = weights * whitening.basis;
  layer.bias = bias - layer.weights * whitening.mean;
  return layer;
}

ProjectionLayer solve_projection_ridge(std::span<const BaseMesh> meshes, std::span<const LandmarkConfig> targets,
                                       double lambda) {
  if (lambda < 0.0) throw DataError("ridge penalty must be non-negative");
  const auto data = projection_data(meshes, targets);
  const auto n = static_cast<double>(data.features.rows());
  const Eigen::RowVectorXd x_mean = data.features.colwise().mean();
  const Eigen::RowVectorXd y_mean = data.targets.colwise().mean();
  const Eigen::MatrixXd xc = data.features.rowwise() - x_mean;
  const Eigen::MatrixXd yc = data.targets.rowwise() - y_mean;
  // (Xc^T Xc / n + lambda I) W^T = Xc^T Yc / n
  const auto p = xc.cols();
  const Eigen::MatrixXd gram = xc.transpose() * xc / n + lambda * Eigen::MatrixXd::Identity(p, p);
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  const Eigen::VectorXd pivots = solver.vectorD();
  if (solver.info() != Eigen::Success || !(pivots.array() > 1e-13 * pivots.cwiseAbs().maxCoeff()).all()) {
    throw DataError("ridge system is singular; increase lambda or add training data");
  }
  ProjectionLayer layer;
  layer.mesh_size = static_cast<int>(p / 2);
  layer.weights = solver.solve(xc.transpose() * yc / n).transpose();
  layer.bias = (y_mean - x_mean * layer.weights.transpose()).transpose();
  return layer;
}

double projection_objective(const ProjectionLayer& layer, const ProjectionData& data, double lambda) {
  const Eigen::MatrixXd err =
      ((data.features * layer.weights.transpose()).rowwise() + layer.bias.transpose()) - data.targets;
  return err.squaredNorm() / static_cast<double>(data.features.rows()) + lambda * layer.weights.squaredNorm();
}

}  // namespace facemorph
