#include "facemorph/project.hpp"

#include <filesystem>
#include <mutex>

#include <json.hpp>

namespace facemorph {

namespace fs = std::filesystem;

const char* to_string(ReviewStatus status) {
  return status == ReviewStatus::reviewed ? "reviewed" : "unreviewed";
}

Project::Project(std::string tps_path, std::string images_dir)
    : tps_path_(std::move(tps_path)), images_dir_(std::move(images_dir)) {
  specimens_ = parse_tps(read_file(tps_path_));
  for (std::size_t i = 0; i < specimens_.size(); ++i) {
    if (specimens_[i].landmarks.rows() != kLandmarkCount) {
      throw DataError("specimen " + std::to_string(i) + " has " + std::to_string(specimens_[i].landmarks.rows()) +
                      " landmarks, expected 72");
    }
  }
  status_.assign(specimens_.size(), ReviewStatus::unreviewed);
  if (fs::exists(status_path())) {
    try {
      const auto doc = nlohmann::json::parse(read_file(status_path()));
      const auto values = doc.at("status").get<std::vector<std::string>>();
      if (values.size() == specimens_.size()) {
        for (std::size_t i = 0; i < values.size(); ++i) {
          status_[i] = values[i] == "reviewed" ? ReviewStatus::reviewed : ReviewStatus::unreviewed;
        }
      }
    } catch (const nlohmann::json::exception&) {
      // An unreadable sidecar only loses review marks.
    }
  }
}

std::size_t Project::size() const {
  std::shared_lock lock(mutex_);
  return specimens_.size();
}

void Project::check_index(std::size_t index) const {
  if (index >= specimens_.size()) throw std::out_of_range("no specimen " + std::to_string(index));
}

std::vector<Project::Entry> Project::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<Entry> out;
  for (std::size_t i = 0; i < specimens_.size(); ++i) {
    const auto& s = specimens_[i];
    out.push_back({i, s.id.value_or(std::to_string(i)), s.image_name.value_or(""), image_path(i).has_value(),
                   status_[i]});
  }
  return out;
}

Specimen Project::specimen(std::size_t index) const {
  std::shared_lock lock(mutex_);
  check_index(index);
  return specimens_[index];
}

std::optional<std::string> Project::image_path(std::size_t index) const {
  // Reads only immutable data (image names never change), so no lock.
  if (index >= specimens_.size() || !specimens_[index].image_name) return std::nullopt;
  std::error_code ec;
  const auto root = fs::weakly_canonical(fs::path(images_dir_), ec);
  if (ec) return std::nullopt;
  const auto candidate = fs::weakly_canonical(root / *specimens_[index].image_name, ec);
  if (ec) return std::nullopt;
  const auto rel = candidate.lexically_relative(root);
  if (rel.empty() || *rel.begin() == "..") return std::nullopt;
  if (!fs::is_regular_file(candidate, ec)) return std::nullopt;
  return candidate.string();
}

GrayImage Project::image(std::size_t index) const {
  {
    std::shared_lock lock(mutex_);
    check_index(index);
  }
  const auto path = image_path(index);
  if (!path) throw DataError("image for specimen " + std::to_string(index) + " is missing");
  return read_pgm(*path);
}

int Project::image_height_locked(std::size_t index) const {
  const auto path = image_path(index);
  if (!path) throw DataError("image for specimen " + std::to_string(index) + " is missing");
  return pgm_size(*path).second;
}

LandmarkConfig Project::pixel_landmarks(std::size_t index) const {
  std::shared_lock lock(mutex_);
  check_index(index);
  return tps_to_pixel(specimens_[index].landmarks, image_height_locked(index));
}

void Project::set_pixel_landmarks(std::size_t index, const LandmarkConfig& pixels) {
  if (pixels.rows() != kLandmarkCount) {
    throw DataError("expected 72 landmarks, got " + std::to_string(pixels.rows()));
  }
  if (!pixels.allFinite()) throw DataError("landmarks must be finite");
  std::unique_lock lock(mutex_);
  check_index(index);
  specimens_[index].landmarks = pixel_to_tps(pixels, image_height_locked(index));
  status_[index] = ReviewStatus::reviewed;
}

void Project::save() {
  std::unique_lock lock(mutex_);
  write_file_atomic(tps_path_, write_tps(specimens_), before_rename_);
  nlohmann::json status = nlohmann::json::array();
  for (const auto s : status_) status.push_back(to_string(s));
  write_file_atomic(status_path(), nlohmann::json{{"status", status}}.dump(2) + "\n");
}

void Project::set_before_rename(std::function<void(const std::string&)> hook) {
  std::unique_lock lock(mutex_);
  before_rename_ = std::move(hook);
}

}  // namespace facemorph
