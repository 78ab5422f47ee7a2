#include "facemorph/patch_refiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace facemorph {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using IndexMatrix = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;
// Gradients of the im2col layout are accumulated a row at a time.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows of `in` are pixels of a side x side map (row = y * side + x). Output
/// side is side / 2; `arg` records which input row won.
void max_pool(const Eigen::MatrixXd& in, int side, Eigen::MatrixXd& out, IndexMatrix& arg) {
  const int half = side / 2;
  out.resize(half * half, in.cols());
  arg.resize(half * half, in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (int py = 0; py < half; ++py) {
      for (int px = 0; px < half; ++px) {
        Eigen::Index best = (2 * py) * side + 2 * px;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const Eigen::Index r = (2 * py + dy) * side + 2 * px + dx;
            if (in(r, c) > in(best, c)) best = r;
          }
        }
        out(py * half + px, c) = in(best, c);
        arg(py * half + px, c) = best;
      }
    }
  }
}

/// 3x3 valid patches of a side x side map with `in.cols()` channels; column
/// index is (ky * 3 + kx) * channels + c. Filled by column: each output row of
/// the map is a contiguous run of an input row.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& in, int side) {
  const int out_side = side - 2;
  const auto channels = in.cols();
  Eigen::MatrixXd cols(out_side * out_side, 9 * channels);
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (Eigen::Index c = 0; c < channels; ++c) {
        auto dst = cols.col((ky * 3 + kx) * channels + c);
        const auto src = in.col(c);
        for (int oy = 0; oy < out_side; ++oy) {
          dst.segment(oy * out_side, out_side) = src.segment((oy + ky) * side + kx, out_side);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col.
RowMatrix col2im(const RowMatrix& cols, int side, Eigen::Index channels) {
  const int out_side = side - 2;
  RowMatrix in = RowMatrix::Zero(side * side, channels);
  for (int oy = 0; oy < out_side; ++oy) {
    for (int ox = 0; ox < out_side; ++ox) {
      const Eigen::Index row = oy * out_side + ox;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          in.row((oy + ky) * side + ox + kx) += cols.row(row).segment((ky * 3 + kx) * channels, channels);
        }
      }
    }
  }
  return in;
}

}  // namespace

struct PatchRefiner::Activations {
  Eigen::MatrixXd cols1, z1, pool1, cols2, z2, pool2;
  IndexMatrix arg1, arg2;
  Eigen::VectorXd input, h_pre, h;
  Eigen::Vector2d raw, out;
};

PatchRefiner::PatchRefiner(int patch_size) : patch_size_(patch_size) {
  if (patch_size < 11 || patch_size % 2 == 0) throw std::invalid_argument("patch size must be odd and >= 11");
  auto& l = layout_;
  l.s1 = patch_size - 2;
  l.p1 = l.s1 / 2;
  l.s2 = l.p1 - 2;
  l.p2 = l.s2 / 2;
  l.flat = l.p2 * l.p2 * kConv2;
  const Eigen::Index fc_in = l.flat + kLandmarkCount;
  l.conv1_w = 0;
  l.conv1_b = l.conv1_w + 9 * kConv1;
  l.conv2_w = l.conv1_b + kConv1;
  l.conv2_b = l.conv2_w + 9 * kConv1 * kConv2;
  l.fc1_w = l.conv2_b + kConv2;
  l.fc1_b = l.fc1_w + kHidden * fc_in;
  l.fc2_w = l.fc1_b + kHidden;
  l.fc2_b = l.fc2_w + 2 * kHidden;
  l.total = l.fc2_b + 2;
  params_ = Eigen::VectorXd::Zero(l.total);
}

void PatchRefiner::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto fill = [&](Eigen::Index begin, Eigen::Index count, double fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (Eigen::Index i = 0; i < count; ++i) params_(begin + i) = dist(rng);
  };
  const auto& l = layout_;
  params_.setZero();
  fill(l.conv1_w, 9 * kConv1, 9.0);
  fill(l.conv2_w, 9 * kConv1 * kConv2, 9.0 * kConv1);
  fill(l.fc1_w, l.fc1_b - l.fc1_w, static_cast<double>(l.flat + kLandmarkCount));
  fill(l.fc2_w, 2 * kHidden, static_cast<double>(kHidden));
}

PatchRefiner::Activations PatchRefiner::forward(const Patch& patch, LandmarkIndex index) const {
  if (patch.rows() != patch_size_ || patch.cols() != patch_size_) {
    throw std::invalid_argument("patch does not match the refiner's patch size");
  }
  if (index < 1 || index > kLandmarkCount) throw std::out_of_range("landmark index out of range");
  const auto& l = layout_;
  const double* p = params_.data();
  const ConstMatMap w1(p + l.conv1_w, 9, kConv1);
  const ConstMatMap w2(p + l.conv2_w, 9 * kConv1, kConv2);
  const Eigen::Index fc_in = l.flat + kLandmarkCount;
  const ConstMatMap f1(p + l.fc1_w, kHidden, fc_in);
  const ConstMatMap f2(p + l.fc2_w, 2, kHidden);

  Activations a;
  // Patch rows are y, so the row-major pixel list is the transposed storage.
  const Eigen::MatrixXd pixels = patch.transpose().reshaped(patch.size(), 1);
  a.cols1 = im2col(pixels, patch_size_);
  // k = 9 is too thin for the blocked product to pay off.
  a.z1 = a.cols1.lazyProduct(w1).rowwise() + params_.segment(l.conv1_b, kConv1).transpose();
  max_pool(a.z1.cwiseMax(0.0), l.s1, a.pool1, a.arg1);
  a.cols2 = im2col(a.pool1, l.p1);
  a.z2 = (a.cols2 * w2).rowwise() + params_.segment(l.conv2_b, kConv2).transpose();
  max_pool(a.z2.cwiseMax(0.0), l.s2, a.pool2, a.arg2);

  a.input = Eigen::VectorXd::Zero(fc_in);
  for (Eigen::Index pos = 0; pos < a.pool2.rows(); ++pos) {
    a.input.segment(pos * kConv2, kConv2) = a.pool2.row(pos).transpose();
  }
  a.input(l.flat + row_of(index)) = 1.0;
  a.h_pre = f1 * a.input + params_.segment(l.fc1_b, kHidden);
  a.h = a.h_pre.cwiseMax(0.0);
  a.raw = f2 * a.h + params_.segment(l.fc2_b, 2);
  const double limit = patch_size_ / 2.0;
  a.out = a.raw.cwiseMax(-limit).cwiseMin(limit);
  return a;
}

Eigen::Vector2d PatchRefiner::predict(const Patch& patch, LandmarkIndex index) const {
  return forward(patch, index).out;
}

double PatchRefiner::loss(const Patch& patch, LandmarkIndex index, const Eigen::Vector2d& target) const {
  return (forward(patch, index).out - target).squaredNorm();
}

double PatchRefiner::accumulate_gradient(const Patch& patch, LandmarkIndex index, const Eigen::Vector2d& target,
                                         Eigen::VectorXd& gradient) const {
  if (gradient.size() != params_.size()) throw std::invalid_argument("gradient has the wrong size");
  const auto a = forward(patch, index);
  const auto& l = layout_;
  const double* p = params_.data();
  const Eigen::Index fc_in = l.flat + kLandmarkCount;
  const ConstMatMap w2(p + l.conv2_w, 9 * kConv1, kConv2);
  const ConstMatMap f1(p + l.fc1_w, kHidden, fc_in);
  const ConstMatMap f2(p + l.fc2_w, 2, kHidden);
  double* g = gradient.data();
  MatMap gw1(g + l.conv1_w, 9, kConv1);
  MatMap gw2(g + l.conv2_w, 9 * kConv1, kConv2);
  MatMap gf1(g + l.fc1_w, kHidden, fc_in);
  MatMap gf2(g + l.fc2_w, 2, kHidden);

  const Eigen::Vector2d err = a.out - target;
  const double limit = patch_size_ / 2.0;
  Eigen::Vector2d d_raw = 2.0 * err;
  for (int k = 0; k < 2; ++k) {
    if (std::abs(a.raw(k)) > limit) d_raw(k) = 0.0;
  }

  gf2 += d_raw * a.h.transpose();
  gradient.segment(l.fc2_b, 2) += d_raw;
  const Eigen::VectorXd d_h_pre = (f2.transpose() * d_raw).cwiseProduct((a.h_pre.array() > 0.0).cast<double>().matrix());
  // The one-hot tail of the input has a single nonzero.
  gf1.leftCols(l.flat) += d_h_pre * a.input.head(l.flat).transpose();
  gf1.col(l.flat + row_of(index)) += d_h_pre;
  gradient.segment(l.fc1_b, kHidden) += d_h_pre;
  const Eigen::VectorXd d_input = f1.leftCols(l.flat).transpose() * d_h_pre;

  // Each pooled value came from one pre-activation, and ReLU passes the
  // gradient only where that was positive; every other entry of d_z is zero.
  RowMatrix d_cols2 = RowMatrix::Zero(a.cols2.rows(), a.cols2.cols());
  for (Eigen::Index pos = 0; pos < a.pool2.rows(); ++pos) {
    for (Eigen::Index c = 0; c < kConv2; ++c) {
      const auto src = a.arg2(pos, c);
      if (!(a.z2(src, c) > 0.0)) continue;
      const double v = d_input(pos * kConv2 + c);
      gw2.col(c) += v * a.cols2.row(src).transpose();
      g[l.conv2_b + c] += v;
      d_cols2.row(src) += v * w2.col(c).transpose();
    }
  }
  const RowMatrix d_pool1 = col2im(d_cols2, l.p1, kConv1);
  for (Eigen::Index pos = 0; pos < a.pool1.rows(); ++pos) {
    for (Eigen::Index c = 0; c < kConv1; ++c) {
      const auto src = a.arg1(pos, c);
      if (!(a.z1(src, c) > 0.0)) continue;
      const double v = d_pool1(pos, c);
      gw1.col(c) += v * a.cols1.row(src).transpose();
      g[l.conv1_b + c] += v;
    }
  }
  return err.squaredNorm();
}

nlohmann::json PatchRefiner::to_json() const {
  return {{"patch_size", patch_size_},
          {"architecture", "conv3x3x8-relu-pool2-conv3x3x16-relu-pool2-dense32-relu-dense2"},
          {"parameters", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

PatchRefiner PatchRefiner::from_json(const nlohmann::json& j) {
  PatchRefiner r(j.at("patch_size").get<int>());
  const auto values = j.at("parameters").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != r.parameter_count()) {
    throw DataError("refiner has " + std::to_string(values.size()) + " parameters, expected " +
                    std::to_string(r.parameter_count()));
  }
  r.params_ = Eigen::Map<const Eigen::VectorXd>(values.data(), r.parameter_count());
  return r;
}

RefinerDataset build_refiner_dataset(const std::vector<GrayImage>& images, const std::vector<LandmarkConfig>& rough,
                                     const std::vector<LandmarkConfig>& truth, double jitter, int draws,
                                     std::uint64_t seed) {
  if (images.size() != rough.size() || images.size() != truth.size()) {
    throw DataError("images, rough and true configurations differ in count");
  }
  if (draws < 1 || jitter < 0.0) throw DataError("invalid refiner sampling options");
  RefinerDataset data;
  data.images = images;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-jitter, jitter);
  for (std::size_t f = 0; f < images.size(); ++f) {
    for (int d = 0; d < draws; ++d) {
      for (LandmarkIndex i = 1; i <= kLandmarkCount; ++i) {
        const auto r = row_of(i);
        RefinerSample s;
        s.image = f;
        s.index = i;
        s.x = rough[f](r, 0) + shift(rng);
        s.y = rough[f](r, 1) + shift(rng);
        s.offset = Eigen::Vector2d(truth[f](r, 0) - s.x, truth[f](r, 1) - s.y);
        data.samples.push_back(s);
      }
    }
  }
  return data;
}

std::vector<double> train_refiner(PatchRefiner& refiner, const RefinerDataset& data,
                                  const RefinerTraining& options) {
  if (options.epochs < 1 || options.batch_size < 1 || !(options.learning_rate > 0.0) || options.momentum < 0.0 ||
      options.momentum >= 1.0) {
    throw DataError("invalid refiner training options");
  }
  if (data.samples.empty()) throw DataError("refiner dataset is empty");
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd gradient(refiner.parameter_count());
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(refiner.parameter_count());
  std::vector<double> curve;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      gradient.setZero();
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = data.samples[order[k]];
        const auto patch = extract_patch(data.images[s.image], s.x, s.y, refiner.patch_size());
        total += refiner.accumulate_gradient(patch, s.index, s.offset, gradient);
      }
      gradient /= static_cast<double>(end - start);
      velocity = options.momentum * velocity - options.learning_rate * gradient;
      refiner.parameters() += velocity;
    }
    curve.push_back(total / static_cast<double>(order.size()));
  }
  return curve;
}

LandmarkConfig refine_landmarks(const PatchRefiner& refiner, const GrayImage& image, const LandmarkConfig& rough) {
  if (rough.rows() != kLandmarkCount) throw DataError("expected 72 rough landmarks");
  LandmarkConfig out(kLandmarkCount, 2);
  for (LandmarkIndex i = 1; i <= kLandmarkCount; ++i) {
    const auto r = row_of(i);
    const auto offset = refiner.predict(extract_patch(image, rough(r, 0), rough(r, 1), refiner.patch_size()), i);
    out.row(r) = rough.row(r) + offset.transpose();
  }
  return out;
}

}  // namespace facemorph
