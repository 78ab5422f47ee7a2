#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facemorph/landmark_schema.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

/// One TPS record. Coordinates follow the TPS y-up convention.
struct Specimen {
  LandmarkConfig landmarks;
  std::optional<std::string> image_name;
  std::optional<std::string> id;
  std::optional<double> scale;
};

/// Parse failure carrying the 1-based line (or CSV row) it refers to.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses a TPS landmark file. Keys are case-insensitive, CRLF and blank
/// lines are tolerated, and unknown `KEY=` lines are skipped with a warning.
std::vector<Specimen> parse_tps(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Canonical TPS text: 5-decimal coordinates, then IMAGE=, ID=, SCALE= when
/// present, LF line endings. Throws DataError naming the specimen on
/// non-finite input.
std::string write_tps(const std::vector<Specimen>& specimens);

std::vector<SliderTriplet> parse_sliders(std::string_view text);
std::string write_sliders(const std::vector<SliderTriplet>& triplets);

/// y_tps = image_height - y_pixel. The map is its own inverse.
LandmarkConfig pixel_to_tps(const LandmarkConfig& points, double image_height);
LandmarkConfig tps_to_pixel(const LandmarkConfig& points, double image_height);

std::string read_file(const std::string& path);
/// Writes via a sibling temporary file ("<path>.tmp") and rename, so readers
/// never see a partially written file. `before_rename` runs once the
/// temporary is complete; if it throws, the temporary is removed and the
/// target is left as it was.
void write_file_atomic(const std::string& path, std::string_view contents,
                       const std::function<void(const std::string&)>& before_rename = {});

}  // namespace facemorph
