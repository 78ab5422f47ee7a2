#include "facemorph/landmark_schema.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace facemorph {

std::string_view to_string(LandmarkKind kind) {
  switch (kind) {
    case LandmarkKind::anatomical: return "anatomical";
    case LandmarkKind::curve_semilandmark: return "curve_semilandmark";
    case LandmarkKind::constructed_midpoint: return "constructed_midpoint";
  }
  return "?";
}

std::string_view to_string(Side side) {
  switch (side) {
    case Side::midline: return "midline";
    case Side::first_of_pair: return "first_of_pair";
    case Side::second_of_pair: return "second_of_pair";
  }
  return "?";
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::non_finite: return "non_finite";
    case IssueKind::out_of_bounds: return "out_of_bounds";
    case IssueKind::suspected_swap: return "suspected_swap";
    case IssueKind::duplicate_points: return "duplicate_points";
  }
  return "?";
}

namespace {

constexpr auto A = LandmarkKind::anatomical;
constexpr auto C = LandmarkKind::curve_semilandmark;
constexpr auto M = LandmarkKind::constructed_midpoint;
constexpr auto Mid = Side::midline;
constexpr auto L = Side::first_of_pair;
constexpr auto R = Side::second_of_pair;

constexpr std::array<LandmarkDef, kLandmarkCount> kTable{{
    {1, "TRICHION", A, Mid, "hairline, on the midline"},
    {2, "MENTON", A, Mid, "lowest point of the jaw outline"},
    {3, "LABIALE INFERIUS", A, Mid, "lower lip border, on the midline"},
    {4, "", M, L, "midpoint of 3 and 6"},
    {5, "", M, R, "midpoint of 3 and 7"},
    {6, "CHEILON", A, L, "mouth corner"},
    {7, "CHEILON", A, R, "mouth corner"},
    {8, "LABIALE SUPERIUS", A, Mid, "upper lip border, on the midline"},
    {9, "CHRISTA PHILTRI", A, L, "philtrum crest on the upper lip border"},
    {10, "CHRISTA PHILTRI", A, R, "philtrum crest on the upper lip border"},
    {11, "", M, L, "midpoint of 8 and 9"},
    {12, "", M, R, "midpoint of 8 and 10"},
    {13, "SUBNASALE", A, Mid, "base of the nasal septum"},
    {14, "COLUMELLA APEX", A, L, "top of the columella at the nostril"},
    {15, "COLUMELLA APEX", A, R, "top of the columella at the nostril"},
    {16, "ALARE", A, L, "widest point of the nasal ala"},
    {17, "ALARE", A, R, "widest point of the nasal ala"},
    {18, "ALAE ORIGIN", A, L, "base of the nasal ala"},
    {19, "ALAE ORIGIN", A, R, "base of the nasal ala"},
    {20, "ENDOCANTHION", A, L, "inner eye corner"},
    {21, "EXOCANTHION", A, L, "outer eye corner"},
    {22, "PALPEBRALE SUPERIUS", A, L, "top of the iris"},
    {23, "PALPEBRALE INFERIUS", A, L, "bottom of the iris"},
    {24, "IRIS OUTER BORDER", A, L, "lateral edge of the iris"},
    {25, "IRIS INNER BORDER", A, L, "medial edge of the iris"},
    {26, "", M, L, "midpoint of 20 and 23"},
    {27, "ENDOCANTHION", A, R, "inner eye corner"},
    {28, "EXOCANTHION", A, R, "outer eye corner"},
    {29, "PALPEBRALE INFERIUS", A, R, "bottom of the iris"},
    {30, "PALPEBRALE SUPERIUS", A, R, "top of the iris"},
    {31, "IRIS OUTER BORDER", A, R, "lateral edge of the iris"},
    {32, "IRIS INNER BORDER", A, R, "medial edge of the iris"},
    {33, "", M, R, "midpoint of 27 and 29"},
    {34, "SUPERCILIARE LATERALE", A, L, "lateral end of the eyebrow"},
    {35, "SUPERCILIARE MEDIALE", A, L, "medial end of the eyebrow"},
    {36, "SUPERCILIARE LATERALE", A, R, "lateral end of the eyebrow"},
    {37, "SUPERCILIARE MEDIALE", A, R, "medial end of the eyebrow"},
    {38, "", C, L, "upper eyebrow curve 1/3"},
    {39, "", C, L, "upper eyebrow curve 2/3"},
    {40, "", C, L, "upper eyebrow curve 3/3"},
    {41, "", C, L, "lower eyebrow curve 1/3"},
    {42, "", C, L, "lower eyebrow curve 2/3"},
    {43, "", C, L, "lower eyebrow curve 3/3"},
    {44, "", C, R, "upper eyebrow curve 1/3"},
    {45, "", C, R, "upper eyebrow curve 2/3"},
    {46, "", C, R, "upper eyebrow curve 3/3"},
    {47, "", C, R, "lower eyebrow curve 1/3"},
    {48, "", C, R, "lower eyebrow curve 2/3"},
    {49, "", C, R, "lower eyebrow curve 3/3"},
    {50, "ZYGION", A, L, "widest point of the zygomatic arch"},
    {51, "", C, L, "jaw curve 1/8"},
    {52, "", C, L, "jaw curve 2/8"},
    {53, "", C, L, "jaw curve 3/8"},
    {54, "", C, L, "jaw curve 4/8"},
    {55, "", C, L, "jaw curve 5/8"},
    {56, "", C, L, "jaw curve 6/8"},
    {57, "", C, L, "jaw curve 7/8"},
    {58, "", C, L, "jaw curve 8/8"},
    {59, "ZYGION", A, R, "widest point of the zygomatic arch"},
    {60, "", C, R, "jaw curve 1/8"},
    {61, "", C, R, "jaw curve 2/8"},
    {62, "", C, R, "jaw curve 3/8"},
    {63, "", C, R, "jaw curve 4/8"},
    {64, "", C, R, "jaw curve 5/8"},
    {65, "", C, R, "jaw curve 6/8"},
    {66, "", C, R, "jaw curve 7/8"},
    {67, "", C, R, "jaw curve 8/8"},
    {68, "STOMION", A, Mid, "centre of the lip closure"},
    {69, "", M, L, "midpoint of 68 and 6"},
    {70, "", M, R, "midpoint of 68 and 7"},
    {71, "PUPIL", A, L, "pupil centre"},
    {72, "PUPIL", A, R, "pupil centre"},
}};

PairMap build_pair_map() {
  PairMap map;
  map.pairs = {{4, 5},   {6, 7},   {9, 10},  {11, 12}, {14, 15}, {16, 17}, {18, 19},
               {20, 27}, {21, 28}, {22, 30}, {23, 29}, {24, 31}, {25, 32}, {26, 33},
               {34, 36}, {35, 37}, {38, 44}, {39, 45}, {40, 46}, {41, 47}, {42, 48},
               {43, 49}, {50, 59}, {51, 60}, {52, 61}, {53, 62}, {54, 63}, {55, 64},
               {56, 65}, {57, 66}, {58, 67}, {69, 70}, {71, 72}};
  map.midline = {1, 2, 3, 8, 13, 68};
  return map;
}

void append_chain(std::vector<SliderTriplet>& out, const std::vector<LandmarkIndex>& chain) {
  for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
    out.push_back({chain[i - 1], chain[i], chain[i + 1]});
  }
}

}  // namespace

const std::array<LandmarkDef, kLandmarkCount>& landmark_table() { return kTable; }

const LandmarkDef& landmark(LandmarkIndex index) {
  if (index < 1 || index > kLandmarkCount) {
    throw std::out_of_range("landmark index " + std::to_string(index) + " outside 1..72");
  }
  return kTable[static_cast<std::size_t>(index - 1)];
}

LandmarkIndex PairMap::partner(LandmarkIndex index) const {
  for (const auto& [first, second] : pairs) {
    if (first == index) return second;
    if (second == index) return first;
  }
  return index;
}

const PairMap& pair_map() {
  static const PairMap map = build_pair_map();
  return map;
}

std::vector<SliderTriplet> default_sliders(bool include_midpoints) {
  std::vector<SliderTriplet> out;
  append_chain(out, {2, 51, 52, 53, 54, 55, 56, 57, 58, 50});
  append_chain(out, {2, 60, 61, 62, 63, 64, 65, 66, 67, 59});
  append_chain(out, {34, 38, 39, 40, 35});
  append_chain(out, {34, 41, 42, 43, 35});
  append_chain(out, {36, 44, 45, 46, 37});
  append_chain(out, {36, 47, 48, 49, 37});
  if (include_midpoints) {
    out.insert(out.end(), {{3, 4, 6},
                           {3, 5, 7},
                           {8, 11, 9},
                           {8, 12, 10},
                           {68, 69, 6},
                           {68, 70, 7},
                           {20, 26, 23},
                           {27, 33, 29}});
  }
  return out;
}

std::vector<Eigen::Index> mirror_permutation(const PairMap& pairs) {
  std::vector<Eigen::Index> perm(kLandmarkCount);
  for (Eigen::Index i = 0; i < kLandmarkCount; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (const auto& [first, second] : pairs.pairs) {
    perm[static_cast<std::size_t>(row_of(first))] = row_of(second);
    perm[static_cast<std::size_t>(row_of(second))] = row_of(first);
  }
  return perm;
}

bool ValidationReport::has(IssueKind kind) const {
  return std::any_of(issues.begin(), issues.end(),
                     [kind](const ValidationIssue& issue) { return issue.kind == kind; });
}

ValidationReport validate_config(const LandmarkConfig& config,
                                 std::optional<std::pair<double, double>> image_size,
                                 const ValidationOptions& options) {
  if (config.rows() != kLandmarkCount) {
    throw DataError("configuration has " + std::to_string(config.rows()) +
                    " landmarks, expected 72");
  }
  ValidationReport report;
  std::vector<bool> finite(kLandmarkCount);
  for (Eigen::Index i = 0; i < kLandmarkCount; ++i) {
    finite[static_cast<std::size_t>(i)] = config.row(i).allFinite();
    if (!finite[static_cast<std::size_t>(i)]) {
      report.issues.push_back({IssueKind::non_finite,
                               {static_cast<LandmarkIndex>(i + 1)},
                               "landmark " + std::to_string(i + 1) + " has a non-finite coordinate"});
    }
  }
  auto ok = [&](LandmarkIndex index) { return finite[static_cast<std::size_t>(row_of(index))]; };

  if (image_size) {
    const auto [w, h] = *image_size;
    for (Eigen::Index i = 0; i < kLandmarkCount; ++i) {
      if (!finite[static_cast<std::size_t>(i)]) continue;
      const double x = config(i, 0);
      const double y = config(i, 1);
      if (x < 0.0 || y < 0.0 || x > w || y > h) {
        std::ostringstream msg;
        msg << "landmark " << i + 1 << " at (" << x << ", " << y << ") lies outside the " << w
            << "x" << h << " image";
        report.issues.push_back(
            {IssueKind::out_of_bounds, {static_cast<LandmarkIndex>(i + 1)}, msg.str()});
      }
    }
  }

  // The lateral axis is the summed first->second vector; a pair pointing the
  // other way is probably labelled backwards.
  const auto& map = pair_map();
  Point2d axis = Point2d::Zero();
  for (const auto& [first, second] : map.pairs) {
    if (ok(first) && ok(second)) axis += config.row(row_of(second)) - config.row(row_of(first));
  }
  if (axis.norm() > 0.0) {
    for (const auto& [first, second] : map.pairs) {
      if (!ok(first) || !ok(second)) continue;
      const double along = (config.row(row_of(second)) - config.row(row_of(first))).dot(axis);
      if (along < 0.0) {
        report.issues.push_back({IssueKind::suspected_swap,
                                 {first, second},
                                 "pair (" + std::to_string(first) + "," + std::to_string(second) +
                                     ") is ordered against the other pairs"});
      }
    }
  }

  Point2d centroid = Point2d::Zero();
  int count = 0;
  for (Eigen::Index i = 0; i < kLandmarkCount; ++i) {
    if (finite[static_cast<std::size_t>(i)]) {
      centroid += config.row(i);
      ++count;
    }
  }
  if (count > 1) {
    centroid /= count;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < kLandmarkCount; ++i) {
      if (finite[static_cast<std::size_t>(i)]) ss += (config.row(i) - centroid).squaredNorm();
    }
    const double threshold = options.duplicate_epsilon * std::sqrt(ss);
    for (Eigen::Index i = 0; i < kLandmarkCount; ++i) {
      for (Eigen::Index j = i + 1; j < kLandmarkCount; ++j) {
        if (!finite[static_cast<std::size_t>(i)] || !finite[static_cast<std::size_t>(j)]) continue;
        if ((config.row(i) - config.row(j)).norm() <= threshold) {
          report.issues.push_back({IssueKind::duplicate_points,
                                   {static_cast<LandmarkIndex>(i + 1), static_cast<LandmarkIndex>(j + 1)},
                                   "landmarks " + std::to_string(i + 1) + " and " +
                                       std::to_string(j + 1) + " coincide"});
        }
      }
    }
  }
  return report;
}

}  // namespace facemorph
