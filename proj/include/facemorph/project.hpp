#pragma once

#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "facemorph/image.hpp"
#include "facemorph/tps_io.hpp"

namespace facemorph {

enum class ReviewStatus { unreviewed, reviewed };
const char* to_string(ReviewStatus status);

/// A TPS file under review together with its image folder. Review status is
/// kept in a sidecar "<tps>.status.json", never in the TPS itself.
///
/// Thread-safe: readers share a lock, mutations and saves take it exclusively.
class Project {
 public:
  /// Throws DataError if the TPS cannot be read or parsed.
  Project(std::string tps_path, std::string images_dir);

  struct Entry {
    std::size_t index;
    std::string id;
    std::string image_name;
    bool image_found;
    ReviewStatus status;
  };

  std::size_t size() const;
  std::vector<Entry> entries() const;
  Specimen specimen(std::size_t index) const;

  /// Image file inside the images directory, or nothing when the record has
  /// no IMAGE= line, the file is absent, or the name escapes the directory.
  std::optional<std::string> image_path(std::size_t index) const;
  /// Throws DataError when the image is unavailable.
  GrayImage image(std::size_t index) const;

  /// Landmarks in pixel coordinates (y down). Needs the image height.
  LandmarkConfig pixel_landmarks(std::size_t index) const;
  /// Replaces all 72 points (pixel coordinates, y down) and marks the
  /// specimen reviewed. Throws DataError on a wrong count or non-finite values.
  void set_pixel_landmarks(std::size_t index, const LandmarkConfig& pixels);

  /// Atomically rewrites the TPS, then the status sidecar.
  void save();

  const std::string& tps_path() const { return tps_path_; }
  std::string status_path() const { return tps_path_ + ".status.json"; }

  /// Test hook run between writing and renaming the TPS temporary file.
  void set_before_rename(std::function<void(const std::string&)> hook);

 private:
  int image_height_locked(std::size_t index) const;
  void check_index(std::size_t index) const;

  std::string tps_path_;
  std::string images_dir_;
  std::vector<Specimen> specimens_;
  std::vector<ReviewStatus> status_;
  std::function<void(const std::string&)> before_rename_;
  mutable std::shared_mutex mutex_;
};

}  // namespace facemorph
