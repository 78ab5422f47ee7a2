#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "facemorph/types.hpp"

namespace facemorph {

enum class LandmarkKind { anatomical, curve_semilandmark, constructed_midpoint };
enum class Side { midline, first_of_pair, second_of_pair };

std::string_view to_string(LandmarkKind kind);
std::string_view to_string(Side side);

struct LandmarkDef {
  LandmarkIndex index;
  std::string_view name;  // empty for unnamed points
  LandmarkKind kind;
  Side side;
  std::string_view note;
};

struct PairMap {
  std::vector<std::pair<LandmarkIndex, LandmarkIndex>> pairs;
  std::vector<LandmarkIndex> midline;

  /// Mirror partner of an index (itself for midline points).
  LandmarkIndex partner(LandmarkIndex index) const;
};

struct SliderTriplet {
  LandmarkIndex before;
  LandmarkIndex slide;
  LandmarkIndex after;

  friend bool operator==(const SliderTriplet&, const SliderTriplet&) = default;
};

/// The full 72-row landmark table, ordered by index.
const std::array<LandmarkDef, kLandmarkCount>& landmark_table();
const LandmarkDef& landmark(LandmarkIndex index);

/// Bilateral pairs (first = viewer's left in an enface image) and midline set.
const PairMap& pair_map();

/// Jaw and eyebrow curve sliders; with `include_midpoints`, also the
/// constructed midpoints anchored to the points that define them.
std::vector<SliderTriplet> default_sliders(bool include_midpoints = false);

/// Permutation that exchanges each bilateral pair: perm[row] is the source row.
std::vector<Eigen::Index> mirror_permutation(const PairMap& pairs = pair_map());

enum class IssueKind { non_finite, out_of_bounds, suspected_swap, duplicate_points };
std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  IssueKind kind;
  std::vector<LandmarkIndex> indices;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  bool has(IssueKind kind) const;
  /// Issues that make the configuration unusable for shape analysis.
  bool has_errors() const { return has(IssueKind::non_finite); }
};

struct ValidationOptions {
  /// Duplicate threshold as a fraction of centroid size.
  double duplicate_epsilon = 1e-6;
};

/// Checks a configuration for problems worth a human look. Throws DataError
/// when the configuration does not have 72 rows.
ValidationReport validate_config(const LandmarkConfig& config,
                                 std::optional<std::pair<double, double>> image_size = std::nullopt,
                                 const ValidationOptions& options = {});

}  // namespace facemorph
