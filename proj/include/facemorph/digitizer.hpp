#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "facemorph/base_mesh.hpp"
#include "facemorph/image.hpp"
#include "facemorph/patch_refiner.hpp"
#include "facemorph/projection.hpp"
#include "facemorph/tps_io.hpp"

namespace facemorph {

/// Projection followed by patch refinement. Immutable once trained or loaded.
struct DigitizerModel {
  static constexpr int kVersion = 1;

  int version = kVersion;
  ProjectionLayer projection;
  PatchRefiner refiner;
  nlohmann::json meta = nlohmann::json::object();

  int mesh_size() const { return projection.mesh_size; }
};

/// {version, mesh_size, patch_size, projection{W, b}, refiner{...}, meta}.
std::string model_to_json(const DigitizerModel& model);
/// Throws DataError on an unknown version or inconsistent shapes.
DigitizerModel model_from_json(std::string_view text);

struct DigitizerTraining {
  ProjectionTraining projection;
  RefinerTraining refiner;
  int patch_size = 33;
  double jitter = 4.0;
  /// Jittered samples per landmark and image in the refiner's dataset.
  int draws = 8;
  /// Sub-seeds of both stages derive from this one.
  std::uint64_t seed = 0;
};

/// Trains the projection, then the refiner on patches around the trained
/// projection's output. `truth` is in pixel coordinates (y down).
DigitizerModel train_digitizer(const std::vector<GrayImage>& images, const std::vector<BaseMesh>& meshes,
                               const std::vector<LandmarkConfig>& truth, const DigitizerTraining& options = {});

/// Pixel coordinates (y down) before refinement.
LandmarkConfig project_landmarks(const DigitizerModel& model, const BaseMesh& mesh);
/// Pixel coordinates (y down) after refinement.
LandmarkConfig digitize_pixels(const DigitizerModel& model, const GrayImage& image, const BaseMesh& mesh);

struct DigitizeInput {
  std::string name;  // becomes IMAGE=
  std::optional<GrayImage> image;
  std::optional<BaseMesh> mesh;
  /// Why the image or mesh is missing, if known.
  std::string problem;
};

struct DigitizeFailure {
  std::size_t position = 0;  // index into the inputs
  std::string name;
  std::string reason;
};

struct DigitizeResult {
  std::vector<Specimen> specimens;  // input order, TPS coordinates (y up)
  std::vector<DigitizeFailure> failures;
};

/// Digitizes every input it can; a bad input is reported and skipped.
DigitizeResult digitize(const DigitizerModel& model, const std::vector<DigitizeInput>& inputs);

}  // namespace facemorph
