#include "facemorph/synth_faces.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "facemorph/landmark_schema.hpp"
#include "facemorph/shape_geometry.hpp"

namespace facemorph {

namespace {

constexpr double kFaceScale = 0.85;
constexpr double kPi = std::numbers::pi;

using Polygon = std::vector<Eigen::RowVector2d>;

Eigen::RowVector2d at(const LandmarkConfig& c, LandmarkIndex index) { return c.row(row_of(index)); }

void set(LandmarkConfig& c, LandmarkIndex index, double x, double y) {
  c(row_of(index), 0) = x;
  c(row_of(index), 1) = y;
}

void set_midpoint(LandmarkConfig& c, LandmarkIndex index, LandmarkIndex a, LandmarkIndex b) {
  c.row(row_of(index)) = 0.5 * (c.row(row_of(a)) + c.row(row_of(b)));
}

/// Circular arc from p0 to p1 bulging towards -y by `sagitta`; returns the
/// interior points at equal angle steps.
std::vector<Eigen::RowVector2d> arc_points(Eigen::RowVector2d p0, Eigen::RowVector2d p1, double sagitta,
                                           int count) {
  const Eigen::RowVector2d chord = p1 - p0;
  const double length = chord.norm();
  Eigen::RowVector2d normal(-chord.y(), chord.x());
  normal /= length;
  if (normal.y() > 0.0) normal = -normal;
  const double radius = (length * length / 4.0 + sagitta * sagitta) / (2.0 * sagitta);
  const Eigen::RowVector2d center = 0.5 * (p0 + p1) - normal * (radius - sagitta);
  const double a0 = std::atan2(p0.y() - center.y(), p0.x() - center.x());
  const double a1 = std::atan2(p1.y() - center.y(), p1.x() - center.x());
  double delta = a1 - a0;
  while (delta > kPi) delta -= 2.0 * kPi;
  while (delta <= -kPi) delta += 2.0 * kPi;
  std::vector<Eigen::RowVector2d> out;
  for (int k = 1; k <= count; ++k) {
    const double a = a0 + delta * k / (count + 1);
    out.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a));
  }
  return out;
}

void derive_constructed(LandmarkConfig& c) {
  set_midpoint(c, 4, 3, 6);
  set_midpoint(c, 5, 3, 7);
  set_midpoint(c, 11, 8, 9);
  set_midpoint(c, 12, 8, 10);
  set_midpoint(c, 69, 68, 6);
  set_midpoint(c, 70, 68, 7);
  set_midpoint(c, 26, 20, 23);
  set_midpoint(c, 33, 27, 29);
}

constexpr std::array<LandmarkIndex, 4> kLeftIris = {22, 23, 24, 25};
constexpr std::array<LandmarkIndex, 4> kRightIris = {30, 29, 31, 32};

bool is_curve_semilandmark(LandmarkIndex i) { return (i >= 38 && i <= 49) || (i >= 51 && i <= 58) || (i >= 60 && i <= 67); }
bool is_iris_border(LandmarkIndex i) { return (i >= 22 && i <= 25) || (i >= 29 && i <= 32); }
bool is_derived_midpoint(LandmarkIndex i) {
  return i == 4 || i == 5 || i == 11 || i == 12 || i == 69 || i == 70 || i == 26 || i == 33;
}

// ---- rasterization -------------------------------------------------------

struct Canvas {
  int width;
  int height;
  std::vector<double> values;

  Canvas(int w, int h, double fill) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
  void blend(int x, int y, double value, double alpha) {
    if (alpha <= 0.0) return;
    auto& v = values[static_cast<std::size_t>(y) * width + x];
    v = v * (1.0 - alpha) + value * alpha;
  }
};

void fill_polygon(Canvas& canvas, const Polygon& poly, double value) {
  double min_x = poly[0].x(), max_x = min_x, min_y = poly[0].y(), max_y = min_y;
  for (const auto& p : poly) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x)) - 1);
  const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(max_x)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y)) - 1);
  const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(max_y)) + 1);
  constexpr int kSub = 4;
  // Even-odd rule per sub-scanline; a sample is inside when it lies in
  // [c_2k, c_2k+1) of the sorted edge crossings.
  std::vector<int> hits(static_cast<std::size_t>(x1 - x0 + 1));
  std::vector<double> crossings;
  for (int y = y0; y <= y1; ++y) {
    std::fill(hits.begin(), hits.end(), 0);
    for (int sy = 0; sy < kSub; ++sy) {
      const double py = y - 0.5 + (sy + 0.5) / kSub;
      crossings.clear();
      for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a.y() > py) != (b.y() > py)) crossings.push_back(a.x() + (py - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
      }
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        // sample columns px = x - 0.5 + (sx + 0.5) / kSub; index q = x * kSub + sx
        const auto first = static_cast<long>(std::ceil((crossings[k] + 0.5) * kSub - 0.5));
        const auto last = static_cast<long>(std::ceil((crossings[k + 1] + 0.5) * kSub - 0.5)) - 1;
        for (long q = std::max<long>(first, static_cast<long>(x0) * kSub);
             q <= std::min<long>(last, static_cast<long>(x1) * kSub + kSub - 1); ++q) {
          ++hits[static_cast<std::size_t>(q / kSub - x0)];
        }
      }
    }
    for (int x = x0; x <= x1; ++x) {
      canvas.blend(x, y, value, static_cast<double>(hits[static_cast<std::size_t>(x - x0)]) / (kSub * kSub));
    }
  }
}

double segment_distance(const Eigen::RowVector2d& p, const Eigen::RowVector2d& a, const Eigen::RowVector2d& b) {
  const Eigen::RowVector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

/// One-pixel anti-aliased polyline; coverage comes from the nearest segment.
void draw_polyline(Canvas& canvas, const Polygon& line, double value) {
  double min_x = line[0].x(), max_x = min_x, min_y = line[0].y(), max_y = min_y;
  for (const auto& p : line) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x)) - 2);
  const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(max_x)) + 2);
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y)) - 2);
  const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(max_y)) + 2);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Eigen::RowVector2d p(x, y);
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s + 1 < line.size(); ++s) d = std::min(d, segment_distance(p, line[s], line[s + 1]));
      canvas.blend(x, y, value, std::clamp(1.0 - d, 0.0, 1.0));
    }
  }
}

Polygon ellipse_polygon(Eigen::RowVector2d center, Eigen::RowVector2d axis_u, double semi_u, double semi_v,
                        int segments = 48) {
  const Eigen::RowVector2d axis_v(-axis_u.y(), axis_u.x());
  Polygon poly;
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * kPi * i / segments;
    poly.push_back(center + axis_u * semi_u * std::cos(t) + axis_v * semi_v * std::sin(t));
  }
  return poly;
}

Polygon chain(const LandmarkConfig& c, std::initializer_list<LandmarkIndex> indices) {
  Polygon out;
  for (auto i : indices) out.push_back(at(c, i));
  return out;
}

struct PoseMap {
  Eigen::Matrix2d rotation;  // applied to row vectors: p * rotation^T
  Eigen::RowVector2d offset;
  double scale;

  Eigen::RowVector2d operator()(const Eigen::RowVector2d& p) const {
    return offset + scale * (p * rotation.transpose());
  }
  Polygon operator()(const Polygon& poly) const {
    Polygon out;
    out.reserve(poly.size());
    for (const auto& p : poly) out.push_back((*this)(p));
    return out;
  }
  LandmarkConfig operator()(const LandmarkConfig& c) const {
    LandmarkConfig out = (scale * (c * rotation.transpose())).rowwise() + offset;
    return out;
  }
};

PoseMap make_pose(const Pose& pose, int canvas) {
  PoseMap map;
  map.rotation << std::cos(pose.angle), -std::sin(pose.angle), std::sin(pose.angle), std::cos(pose.angle);
  map.offset = Eigen::RowVector2d(canvas / 2.0 + pose.tx, canvas / 2.0 + pose.ty);
  map.scale = pose.scale;
  return map;
}

GrayImage render(const LandmarkConfig& face, const ShapeCoefficients& shape, const PoseMap& pose, int canvas,
                 double noise_sd, std::mt19937_64& rng) {
  Canvas img(canvas, canvas, 40.0);
  const double fh = shape.face_height * kFaceScale;

  // Head outline: jaw chain below the zygia, elliptical crown above.
  const auto zl = at(face, 50);
  const auto zr = at(face, 59);
  const double cx = 0.5 * (zl.x() + zr.x());
  const double cy = 0.5 * (zl.y() + zr.y());
  const double a = 0.5 * (zr.x() - zl.x());
  const double crown = 115.0 * fh;
  Polygon head = chain(face, {50, 58, 57, 56, 55, 54, 53, 52, 51, 2, 60, 61, 62, 63, 64, 65, 66, 67, 59});
  constexpr int kArc = 40;
  for (int i = kArc - 1; i >= 1; --i) {
    const double t = kPi * i / kArc;
    head.emplace_back(cx - a * std::cos(t), cy - crown * std::sin(t));
  }
  fill_polygon(img, pose(head), 175.0);

  // Hair above a hairline whose apex is the trichion.
  const auto tri = at(face, 1);
  const double drop = 15.0 * fh;
  const double end_y = cy - drop;
  const double end_x = a * std::sqrt(1.0 - (drop / crown) * (drop / crown));
  const double theta_end = std::acos(end_x / a);
  Polygon hair;
  constexpr int kHairSteps = 16;
  const double left_x = cx - end_x;
  const double right_x = cx + end_x;
  for (int i = 0; i <= kHairSteps; ++i) {
    const double x = left_x + (tri.x() - left_x) * i / kHairSteps;
    const double u = (x - tri.x()) / (left_x - tri.x());
    hair.emplace_back(x, tri.y() + (end_y - tri.y()) * u * u);
  }
  for (int i = 1; i <= kHairSteps; ++i) {
    const double x = tri.x() + (right_x - tri.x()) * i / kHairSteps;
    const double u = (x - tri.x()) / (right_x - tri.x());
    hair.emplace_back(x, tri.y() + (end_y - tri.y()) * u * u);
  }
  for (int i = 1; i < kArc; ++i) {
    const double t = (kPi - theta_end) - (kPi - 2.0 * theta_end) * i / kArc;
    hair.emplace_back(cx - a * std::cos(t), cy - crown * std::sin(t));
  }
  fill_polygon(img, pose(hair), 60.0);

  fill_polygon(img, pose(chain(face, {34, 38, 39, 40, 35, 43, 42, 41})), 65.0);
  fill_polygon(img, pose(chain(face, {36, 44, 45, 46, 37, 49, 48, 47})), 65.0);

  const auto draw_eye = [&](LandmarkIndex endo, LandmarkIndex exo, LandmarkIndex pupil,
                            const std::array<LandmarkIndex, 4>& iris) {
    const auto e0 = at(face, endo);
    const auto e1 = at(face, exo);
    const double half = 0.5 * (e1 - e0).norm();
    const Eigen::RowVector2d u = (e1 - e0) / (2.0 * half);
    fill_polygon(img, pose(ellipse_polygon(0.5 * (e0 + e1), u, half, 0.55 * half)), 235.0);
    const auto p = at(face, pupil);
    double r = 0.0;
    for (auto i : iris) r += (at(face, i) - p).norm();
    r /= 4.0;
    fill_polygon(img, pose(ellipse_polygon(p, Eigen::RowVector2d(1, 0), r, r, 32)), 105.0);
    fill_polygon(img, pose(ellipse_polygon(p, Eigen::RowVector2d(1, 0), 0.42 * r, 0.42 * r, 24)), 25.0);
  };
  draw_eye(20, 21, 71, kLeftIris);
  draw_eye(27, 28, 72, kRightIris);

  const double nw = 0.45;
  Polygon bridge_l{Eigen::RowVector2d(nw * at(face, 16).x(), at(face, 16).y() - 24.0 * fh), at(face, 16)};
  Polygon bridge_r{Eigen::RowVector2d(nw * at(face, 17).x(), at(face, 17).y() - 24.0 * fh), at(face, 17)};
  draw_polyline(img, pose(bridge_l), 120.0);
  draw_polyline(img, pose(bridge_r), 120.0);
  draw_polyline(img, pose(chain(face, {16, 18, 14, 13, 15, 19, 17})), 80.0);

  fill_polygon(img, pose(chain(face, {6, 9, 11, 8, 12, 10, 7, 70, 68, 69})), 125.0);
  fill_polygon(img, pose(chain(face, {6, 69, 68, 70, 7, 5, 3, 4})), 140.0);
  draw_polyline(img, pose(chain(face, {6, 69, 68, 70, 7})), 55.0);

  GrayImage out(canvas, canvas);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const double v = img.values[i] + (noise_sd > 0.0 ? noise_sd * noise(rng) : 0.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return out;
}

Eigen::MatrixXd cubic_basis(const Eigen::MatrixX2d& points) {
  Eigen::MatrixXd basis(points.rows(), 10);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double u = points(i, 0) / 100.0;
    const double v = points(i, 1) / 100.0;
    basis.row(i) << 1.0, u, v, u * u, u * v, v * v, u * u * u, u * u * v, u * v * v, v * v * v;
  }
  return basis;
}

double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Facial features that a displacement field moves rigidly (by the field's
/// mean over the feature). Outline points are not grouped.
const std::vector<std::vector<LandmarkIndex>> kFeatureGroups = {
    {3, 6, 7, 8, 9, 10, 68},                      // mouth
    {13, 14, 15, 16, 17, 18, 19},                 // nose
    {20, 21, 71},                                 // left eye
    {27, 28, 72},                                 // right eye
    {34, 35, 38, 39, 40, 41, 42, 43},             // left brow
    {36, 37, 44, 45, 46, 47, 48, 49},             // right brow
};

}  // namespace

void FaceParams::validate() const {
  const std::array<std::pair<const char*, double>, 8> multipliers = {{
      {"jaw_width", shape.jaw_width},
      {"face_height", shape.face_height},
      {"eye_spacing", shape.eye_spacing},
      {"eye_size", shape.eye_size},
      {"iris_radius", shape.iris_radius},
      {"mouth_width", shape.mouth_width},
      {"brow_arch", shape.brow_arch},
      {"nose_width", shape.nose_width},
  }};
  for (const auto& [name, value] : multipliers) {
    if (!(value >= 0.5 && value <= 2.0)) {
      throw DataError(std::string("shape multiplier ") + name + " outside [0.5, 2]");
    }
  }
  // Iris radius 5.2 against eye half-height 0.55 * 14 (both times kFaceScale).
  if (!(5.2 * shape.iris_radius < 0.55 * 14.0 * shape.eye_size)) {
    throw DataError("iris radius must be smaller than the eye");
  }
  if (asymmetry.rows() != kLandmarkCount || asymmetry.cols() != 2 || !asymmetry.allFinite()) {
    throw DataError("asymmetry field must be a finite 72x2 matrix");
  }
  if (!(pose.scale > 0.0) || mesh_size < 10 || pixel_noise_sd < 0.0 || mesh_jitter_sd < 0.0) {
    throw DataError("invalid pose scale, mesh size or noise level");
  }
}

LandmarkConfig face_template(const ShapeCoefficients& s) {
  LandmarkConfig c = LandmarkConfig::Zero(kLandmarkCount, 2);
  const double k = kFaceScale;
  const double fh = s.face_height * k;

  // Midline.
  set(c, 1, 0.0, -95.0 * fh);
  const double jaw_cy = -5.0 * fh;
  const double jaw_a = 68.0 * s.jaw_width * k;
  const double jaw_b = 97.0 * fh;
  set(c, 2, 0.0, jaw_cy + jaw_b);
  set(c, 8, 0.0, 43.0 * fh);
  set(c, 68, 0.0, 50.0 * fh);
  set(c, 3, 0.0, 58.0 * fh);
  set(c, 13, 0.0, 29.0 * fh);

  // Left side (negative x); the right side is its exact mirror image.
  set(c, 50, -jaw_a, jaw_cy);
  for (int j = 1; j <= 8; ++j) {
    const double t = kPi / 2.0 - j * (kPi / 2.0) / 9.0;
    set(c, 50 + j, -jaw_a * std::cos(t), jaw_cy + jaw_b * std::sin(t));
  }

  const double mw = s.mouth_width * k;
  set(c, 6, -22.0 * mw, 50.0 * fh);
  set(c, 9, -6.5 * mw, 41.0 * fh);

  const double nw = s.nose_width * k;
  set(c, 14, -4.5 * nw, 25.0 * fh);
  set(c, 16, -15.0 * nw, 20.0 * fh);
  set(c, 18, -11.0 * nw, 27.0 * fh);

  const double eye_x = -33.0 * s.eye_spacing * k;
  const double eye_y = -12.0 * fh;
  const double half_width = 14.0 * s.eye_size * k;
  const double iris = 5.2 * s.iris_radius * k;
  set(c, 20, eye_x + half_width, eye_y);
  set(c, 21, eye_x - half_width, eye_y);
  set(c, 71, eye_x, eye_y);
  set(c, 22, eye_x, eye_y - iris);
  set(c, 23, eye_x, eye_y + iris);
  set(c, 24, eye_x - iris, eye_y);
  set(c, 25, eye_x + iris, eye_y);

  const Eigen::RowVector2d lateral(eye_x - 19.0 * k, -31.0 * fh);
  const Eigen::RowVector2d medial(eye_x + 17.0 * k, -33.0 * fh);
  set(c, 34, lateral.x(), lateral.y());
  set(c, 35, medial.x(), medial.y());
  const auto upper = arc_points(lateral, medial, 8.0 * s.brow_arch * k, 3);
  const auto lower = arc_points(lateral, medial, 3.0 * s.brow_arch * k, 3);
  for (int j = 0; j < 3; ++j) {
    c.row(row_of(38 + j)) = upper[static_cast<std::size_t>(j)];
    c.row(row_of(41 + j)) = lower[static_cast<std::size_t>(j)];
  }

  set_midpoint(c, 4, 3, 6);
  set_midpoint(c, 11, 8, 9);
  set_midpoint(c, 69, 68, 6);
  set_midpoint(c, 26, 20, 23);

  for (const auto& [first, second] : pair_map().pairs) {
    c(row_of(second), 0) = -c(row_of(first), 0);
    c(row_of(second), 1) = c(row_of(first), 1);
  }
  return c;
}

LandmarkConfig apply_asymmetry(const LandmarkConfig& base, const LandmarkConfig& input_field) {
  LandmarkConfig out = base;
  LandmarkConfig field = input_field;
  for (const auto& group : kFeatureGroups) {
    Eigen::RowVector2d shift = Eigen::RowVector2d::Zero();
    for (const LandmarkIndex i : group) shift += field.row(row_of(i));
    shift /= static_cast<double>(group.size());
    for (const LandmarkIndex i : group) {
      out.row(row_of(i)) += shift;
      field.row(row_of(i)) -= shift;
    }
  }
  std::vector<Eigen::RowVector2d> normals(kLandmarkCount, Eigen::RowVector2d::Zero());
  for (const auto& t : default_sliders(false)) {
    const Eigen::RowVector2d chord = at(base, t.after) - at(base, t.before);
    normals[static_cast<std::size_t>(row_of(t.slide))] = Eigen::RowVector2d(-chord.y(), chord.x()).normalized();
  }
  for (LandmarkIndex i = 1; i <= kLandmarkCount; ++i) {
    const auto r = row_of(i);
    if (is_derived_midpoint(i) || is_iris_border(i)) continue;
    if (i == 1 || i == 2) {
      out(r, 1) += field(r, 1);
    } else if (i == 50 || i == 59) {
      out(r, 0) += field(r, 0);
    } else if (is_curve_semilandmark(i)) {
      const auto& n = normals[static_cast<std::size_t>(r)];
      out.row(r) += field.row(r).dot(n) * n;
    } else {
      out.row(r) += field.row(r);
    }
  }
  for (auto i : kLeftIris) out.row(row_of(i)) += at(out, 71) - at(base, 71);
  for (auto i : kRightIris) out.row(row_of(i)) += at(out, 72) - at(base, 72);
  derive_constructed(out);
  return out;
}

Eigen::MatrixX2d mesh_template(int mesh_size) {
  Eigen::MatrixX2d points(mesh_size, 2);
  const double k = kFaceScale;
  int accepted = 0;
  for (int i = 1; accepted < mesh_size; ++i) {
    const double x = (-72.0 + 144.0 * halton(i, 2)) * k;
    const double y = (-118.0 + 213.0 * halton(i, 3)) * k;
    const double dy = y + 5.0 * k;
    const double b = (dy > 0.0 ? 97.0 : 115.0) * k;
    const double a = 68.0 * k;
    if ((x / a) * (x / a) + (dy / b) * (dy / b) <= 1.0) {
      points.row(accepted++) << x, y;
    }
  }
  return points;
}

Eigen::MatrixXd mesh_generating_map(int mesh_size) {
  const Eigen::MatrixXd phi = cubic_basis(face_template());
  const Eigen::MatrixXd eval = cubic_basis(mesh_template(mesh_size));
  const Eigen::MatrixXd fit = (phi.transpose() * phi).ldlt().solve(phi.transpose());
  return eval * fit;
}

SyntheticFace generate_face(const FaceParams& params, int canvas, std::string name) {
  params.validate();
  if (canvas < 64) throw DataError("canvas must be at least 64 pixels");
  const auto pose = make_pose(params.pose, canvas);
  const LandmarkConfig face = apply_asymmetry(face_template(params.shape), params.asymmetry);
  SyntheticFace out;
  out.name = std::move(name);
  out.params = params;
  out.truth = pose(face);
  const double margin = 2.0;
  if ((out.truth.array() < margin).any() || (out.truth.array() > canvas - 1 - margin).any()) {
    throw DataError("canvas of " + std::to_string(canvas) + " pixels is too small for the posed face");
  }

  std::mt19937_64 rng(params.seed);
  out.image = render(face, params.shape, pose, canvas, params.pixel_noise_sd, rng);

  out.mesh.image_name = out.name + ".pgm";
  out.mesh.image_width = canvas;
  out.mesh.image_height = canvas;
  out.mesh.points = mesh_generating_map(params.mesh_size) * out.truth;
  if (params.mesh_jitter_sd > 0.0) {
    std::normal_distribution<double> jitter(0.0, params.mesh_jitter_sd);
    for (Eigen::Index i = 0; i < out.mesh.points.rows(); ++i) {
      out.mesh.points(i, 0) += jitter(rng);
      out.mesh.points(i, 1) += jitter(rng);
    }
  }
  return out;
}

std::vector<SyntheticFace> generate_population(int n, double spread, std::uint64_t seed,
                                               const PopulationOptions& options) {
  if (n < 1) throw DataError("population size must be at least 1");
  if (spread < 0.0) throw DataError("spread must be non-negative");
  std::vector<SyntheticFace> faces;
  faces.reserve(static_cast<std::size_t>(n));
  std::mt19937_64 rng(splitmix(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto multiplier = [&] { return std::clamp(1.0 + spread * normal(rng), 0.75, 1.25); };

  for (int i = 0; i < n; ++i) {
    FaceParams p;
    p.seed = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(i) + 1));
    p.mesh_size = options.mesh_size;
    p.pixel_noise_sd = options.pixel_noise_sd;
    p.mesh_jitter_sd = options.mesh_jitter_sd;
    auto& s = p.shape;
    s.jaw_width = multiplier();
    s.face_height = multiplier();
    s.eye_spacing = multiplier();
    s.eye_size = multiplier();
    s.iris_radius = multiplier();
    s.mouth_width = multiplier();
    s.brow_arch = multiplier();
    s.nose_width = multiplier();
    s.iris_radius = std::min(s.iris_radius, 0.9 * 0.55 * 14.0 * s.eye_size / 5.2);

    // Individuals differ in how much local detail (and asymmetry) they carry.
    // Each facial feature shifts as a unit; points also move on their own.
    const double amplitude = options.detail_per_spread * spread * std::exp(0.35 * normal(rng));
    for (Eigen::Index r = 0; r < kLandmarkCount; ++r) {
      p.asymmetry(r, 0) = options.point_detail * amplitude * normal(rng);
      p.asymmetry(r, 1) = options.point_detail * amplitude * normal(rng);
    }
    for (const auto& group : kFeatureGroups) {
      const Eigen::RowVector2d shift(amplitude * normal(rng), amplitude * normal(rng));
      for (const LandmarkIndex i : group) p.asymmetry.row(row_of(i)) += shift;
    }
    p.pose.angle = std::clamp(0.4 * spread * normal(rng), -0.25, 0.25);
    p.pose.tx = std::clamp(40.0 * spread * normal(rng), -12.0, 12.0);
    p.pose.ty = std::clamp(40.0 * spread * normal(rng), -12.0, 12.0);
    p.pose.scale = std::clamp(std::exp(0.4 * spread * normal(rng)), 0.88, 1.1);

    char name[32];
    std::snprintf(name, sizeof(name), "face_%03d", i);
    faces.push_back(generate_face(p, options.canvas, name));
  }
  return faces;
}

std::vector<Specimen> truth_specimens(const std::vector<SyntheticFace>& faces) {
  std::vector<Specimen> out;
  out.reserve(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    Specimen s;
    s.landmarks = pixel_to_tps(faces[i].truth, faces[i].image.height);
    s.image_name = faces[i].name + ".pgm";
    s.id = std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

ReplicatePair make_replicates(const std::vector<Specimen>& truths, double noise_sd, std::uint64_t seed) {
  if (noise_sd < 0.0) throw DataError("noise SD must be non-negative");
  ReplicatePair pair;
  pair.rep1 = truths;
  pair.rep2 = truths;
  std::mt19937_64 rng(splitmix(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& s : pair.rep2) {
    for (Eigen::Index r = 0; r < s.landmarks.rows(); ++r) {
      s.landmarks(r, 0) += noise_sd * normal(rng);
      s.landmarks(r, 1) += noise_sd * normal(rng);
    }
  }
  return pair;
}

double calibrated_noise_sd(const std::vector<LandmarkConfig>& truths, double ratio) {
  const auto sample = gpa<double>(truths);
  const double among = sum_squared_distances(sample.configs, sample.mean) / (truths.size() - 1.0);
  double size = 0.0;
  for (const auto& t : truths) size += centroid_size(t);
  size /= static_cast<double>(truths.size());
  // Noise lands on rep2 only, so the within component is half its variance,
  // spread over the 2p - 4 tangent dimensions left after superimposition.
  const double dimensions = 2.0 * static_cast<double>(truths.front().rows()) - 4.0;
  return std::sqrt(2.0 * ratio * among / dimensions) * size;
}

}  // namespace facemorph
