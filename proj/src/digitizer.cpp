#include "facemorph/digitizer.hpp"

#include <cmath>

namespace facemorph {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                 const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DataError(what + " must have " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError(what + " row " + std::to_string(r) + " must have " + std::to_string(cols) + " values");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  if (!m.allFinite()) throw DataError(what + " contains non-finite values");
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string model_to_json(const DigitizerModel& model) {
  nlohmann::json doc;
  doc["version"] = model.version;
  doc["mesh_size"] = model.mesh_size();
  doc["patch_size"] = model.refiner.patch_size();
  doc["projection"] = {{"input_normalization", "mesh bounding-box centre, half of the longer side"},
                       {"W", matrix_to_json(model.projection.weights)},
                       {"b", std::vector<double>(model.projection.bias.data(),
                                                 model.projection.bias.data() + model.projection.bias.size())}};
  doc["refiner"] = model.refiner.to_json();
  doc["meta"] = model.meta;
  return doc.dump() + "\n";
}

DigitizerModel model_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    DigitizerModel model;
    model.version = doc.at("version").get<int>();
    if (model.version != DigitizerModel::kVersion) {
      throw DataError("unsupported model version " + std::to_string(model.version));
    }
    const int mesh_size = doc.at("mesh_size").get<int>();
    if (mesh_size < 1) throw DataError("mesh_size must be positive");
    const Eigen::Index outputs = 2 * kLandmarkCount;
    model.projection.mesh_size = mesh_size;
    model.projection.weights = matrix_from_json(doc.at("projection").at("W"), outputs, 2 * mesh_size, "projection W");
    const auto bias = doc.at("projection").at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(bias.size()) != outputs) throw DataError("projection b must have 144 values");
    model.projection.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), outputs);
    if (!model.projection.bias.allFinite()) throw DataError("projection b contains non-finite values");
    model.refiner = PatchRefiner::from_json(doc.at("refiner"));
    if (doc.at("patch_size").get<int>() != model.refiner.patch_size()) {
      throw DataError("patch_size disagrees with the refiner");
    }
    if (!model.refiner.parameters().allFinite()) throw DataError("refiner weights contain non-finite values");
    model.meta = doc.value("meta", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

DigitizerModel train_digitizer(const std::vector<GrayImage>& images, const std::vector<BaseMesh>& meshes,
                               const std::vector<LandmarkConfig>& truth, const DigitizerTraining& options) {
  if (images.size() != meshes.size() || images.size() != truth.size()) {
    throw DataError("images, meshes and landmark sets differ in count");
  }
  DigitizerModel model;
  auto projection_options = options.projection;
  projection_options.seed = derive_seed(options.seed, 0);
  model.projection = train_projection(meshes, truth, projection_options);

  // Zero refiner epochs leaves an all-zero refiner: output = projection.
  model.refiner = PatchRefiner(options.patch_size);
  std::vector<double> refiner_curve;
  if (options.refiner.epochs > 0) {
    std::vector<LandmarkConfig> rough;
    rough.reserve(meshes.size());
    for (const auto& mesh : meshes) rough.push_back(model.projection.apply(mesh));
    const auto dataset =
        build_refiner_dataset(images, rough, truth, options.jitter, options.draws, derive_seed(options.seed, 1));
    model.refiner.initialize(derive_seed(options.seed, 2));
    auto refiner_options = options.refiner;
    refiner_options.seed = derive_seed(options.seed, 3);
    refiner_curve = train_refiner(model.refiner, dataset, refiner_options);
  }

  const auto& p = options.projection;
  const auto& r = options.refiner;
  model.meta = {
      {"seed", options.seed},
      {"training_images", images.size()},
      {"projection",
       {{"epochs", p.epochs},
        {"batch_size", p.batch_size},
        {"learning_rate", p.learning_rate},
        {"decay", p.decay},
        {"decay_every", p.decay_every},
        {"variance_floor", p.variance_floor},
        {"loss_curve", model.projection.loss_curve}}},
      {"refiner",
       {{"epochs", r.epochs},
        {"batch_size", r.batch_size},
        {"learning_rate", r.learning_rate},
        {"momentum", r.momentum},
        {"jitter", options.jitter},
        {"draws", options.draws},
        {"loss_curve", refiner_curve}}},
  };
  return model;
}

LandmarkConfig project_landmarks(const DigitizerModel& model, const BaseMesh& mesh) {
  if (!mesh.points.allFinite()) throw DataError("mesh contains non-finite points");
  return model.projection.apply(mesh);
}

LandmarkConfig digitize_pixels(const DigitizerModel& model, const GrayImage& image, const BaseMesh& mesh) {
  const auto rough = project_landmarks(model, mesh);
  if (!rough.allFinite()) throw DataError("projection produced non-finite landmarks");
  return refine_landmarks(model.refiner, image, rough);
}

DigitizeResult digitize(const DigitizerModel& model, const std::vector<DigitizeInput>& inputs) {
  DigitizeResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& input = inputs[i];
    const auto fail = [&](std::string reason) { result.failures.push_back({i, input.name, std::move(reason)}); };
    if (!input.image) {
      fail(input.problem.empty() ? "missing image" : input.problem);
      continue;
    }
    if (!input.mesh) {
      fail(input.problem.empty() ? "missing mesh" : input.problem);
      continue;
    }
    try {
      Specimen s;
      s.landmarks = pixel_to_tps(digitize_pixels(model, *input.image, *input.mesh), input.image->height);
      s.image_name = input.name;
      s.id = std::to_string(result.specimens.size());
      result.specimens.push_back(std::move(s));
    } catch (const DataError& e) {
      fail(e.what());
    }
  }
  return result;
}

}  // namespace facemorph
