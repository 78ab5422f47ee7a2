#include "facemorph/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include "facemorph/digitizer.hpp"
#include "facemorph/landmark_schema.hpp"
#include "facemorph/morpho_metrics.hpp"
#include "facemorph/server.hpp"
#include "facemorph/shape_geometry.hpp"
#include "facemorph/synth_faces.hpp"
#include "facemorph/tps_io.hpp"

namespace facemorph {

namespace fs = std::filesystem;

namespace {

/// Raised for bad flag values that CLI parsing cannot catch.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<Specimen> load_specimens(const std::string& path) {
  auto specimens = parse_tps(read_file(path));
  for (std::size_t i = 0; i < specimens.size(); ++i) {
    if (specimens[i].landmarks.rows() != kLandmarkCount) {
      throw DataError(path + ": specimen " + std::to_string(i) + " has " +
                      std::to_string(specimens[i].landmarks.rows()) + " landmarks, expected 72");
    }
  }
  return specimens;
}

std::vector<LandmarkConfig> configs_of(const std::vector<Specimen>& specimens) {
  std::vector<LandmarkConfig> out;
  out.reserve(specimens.size());
  for (const auto& s : specimens) out.push_back(s.landmarks);
  return out;
}

std::vector<SliderTriplet> load_sliders(const std::string& path) {
  if (path.empty()) return {};
  return parse_sliders(read_file(path));
}

std::string specimen_id(const Specimen& s, std::size_t i) { return s.id.value_or(std::to_string(i)); }

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (const char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

struct Scores {
  std::vector<double> distinctiveness;
  std::vector<double> asymmetry;
};

Scores score(const std::vector<Specimen>& specimens, const std::vector<SliderTriplet>& sliders) {
  const auto sample = gpa(configs_of(specimens), std::span<const SliderTriplet>(sliders));
  return {distinctiveness(sample), asymmetry(sample)};
}

}  // namespace

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.count < 1) throw UsageError("--count must be at least 1");
    if (args.spread < 0.0) throw UsageError("--spread must be non-negative");
    fs::create_directories(args.out_dir);
    PopulationOptions options;
    options.canvas = args.canvas;
    options.mesh_size = args.mesh_size;
    const auto faces = generate_population(args.count, args.spread, args.seed, options);
    for (const auto& face : faces) {
      write_pgm((fs::path(args.out_dir) / (face.name + ".pgm")).string(), face.image);
      write_file_atomic((fs::path(args.out_dir) / (face.name + ".mesh.json")).string(), mesh_to_json(face.mesh));
    }
    const auto truths = truth_specimens(faces);
    write_file_atomic((fs::path(args.out_dir) / "truth.tps").string(), write_tps(truths));
    out << "wrote " << faces.size() << " faces to " << args.out_dir << "\n";
    if (args.replicate_noise_sd) {
      double sd = *args.replicate_noise_sd;
      if (sd < 0.0) {
        if (faces.size() < 2) throw UsageError("calibrated replicate noise needs at least two faces");
        sd = calibrated_noise_sd(configs_of(truths), kCalibratedNoiseRatio);
      }
      const auto pair = make_replicates(truths, sd, args.seed ^ 0x5eedULL);
      write_file_atomic((fs::path(args.out_dir) / "replicate.tps").string(), write_tps(pair.rep2));
      out << "wrote replicate.tps with landmark noise SD " << num(sd) << "\n";
    }
    return kExitOk;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.epochs_projection < 1) {
      throw UsageError("--epochs-projection must be at least 1; the projection is trained before the refiner");
    }
    if (args.epochs_refiner < 0) throw UsageError("--epochs-refiner must be non-negative");
    if (args.draws < 1) throw UsageError("--draws must be at least 1");
    if (args.jitter < 0.0) throw UsageError("--jitter must be non-negative");
    const fs::path dir(args.data_dir);
    const std::string truth_path = args.truth_tps.empty() ? (dir / "truth.tps").string() : args.truth_tps;
    const auto truths = load_specimens(truth_path);
    if (truths.size() < 2) throw DataError("training needs at least two faces, found " + std::to_string(truths.size()));

    std::vector<GrayImage> images;
    std::vector<BaseMesh> meshes;
    std::vector<LandmarkConfig> targets;
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      if (!truths[i].image_name) {
        missing.push_back("specimen " + std::to_string(i) + " has no IMAGE= line");
        continue;
      }
      const auto image_path = dir / *truths[i].image_name;
      const auto mesh_path = dir / (fs::path(*truths[i].image_name).stem().string() + ".mesh.json");
      if (!fs::exists(image_path)) missing.push_back(image_path.string());
      if (!fs::exists(mesh_path)) missing.push_back(mesh_path.string());
      if (!fs::exists(image_path) || !fs::exists(mesh_path)) continue;
      images.push_back(read_pgm(image_path.string()));
      meshes.push_back(mesh_from_json(read_file(mesh_path.string())));
      targets.push_back(tps_to_pixel(truths[i].landmarks, images.back().height));
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += "\n  " + m;
      throw DataError("incomplete training triples:" + list);
    }

    DigitizerTraining options;
    options.projection.epochs = args.epochs_projection;
    options.refiner.epochs = args.epochs_refiner;
    options.draws = args.draws;
    options.jitter = args.jitter;
    options.seed = args.seed;
    const auto model = train_digitizer(images, meshes, targets, options);
    write_file_atomic(args.out_model, model_to_json(model));

    const auto& meta = model.meta;
    out << "trained on " << images.size() << " faces\n";
    out << "projection final loss " << num(model.projection.loss_curve.back()) << "\n";
    const auto& refiner_curve = meta["refiner"]["loss_curve"];
    if (!refiner_curve.empty()) out << "refiner final loss " << num(refiner_curve.back().get<double>()) << "\n";
    out << "wrote " << args.out_model << "\n";
    return kExitOk;
  });
}

int cmd_digitize(const DigitizeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    DigitizerModel model;
    try {
      model = model_from_json(read_file(args.model));
    } catch (const DataError& e) {
      throw DataError("cannot load model '" + args.model + "': " + e.what());
    }
    const fs::path dir(args.input_dir);
    if (!fs::is_directory(dir)) throw DataError("'" + args.input_dir + "' is not a directory");

    // Inputs are keyed by file stem: <stem>.pgm with <stem>.mesh.json.
    std::set<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (entry.path().extension() == ".pgm") stems.insert(entry.path().stem().string());
      constexpr std::string_view kMeshSuffix = ".mesh.json";
      if (name.size() > kMeshSuffix.size() && name.ends_with(kMeshSuffix)) {
        stems.insert(name.substr(0, name.size() - kMeshSuffix.size()));
      }
    }
    if (stems.empty()) throw DataError("no inputs: '" + args.input_dir + "' has no .pgm or .mesh.json files");

    std::vector<DigitizeInput> inputs;
    for (const auto& stem : stems) {
      DigitizeInput input;
      input.name = stem + ".pgm";
      const auto image_path = dir / input.name;
      const auto mesh_path = dir / (stem + ".mesh.json");
      try {
        if (!fs::exists(image_path)) throw DataError("missing image " + image_path.string());
        input.image = read_pgm(image_path.string());
        if (!fs::exists(mesh_path)) throw DataError("missing mesh " + mesh_path.string());
        input.mesh = mesh_from_json(read_file(mesh_path.string()));
      } catch (const DataError& e) {
        input.problem = e.what();
        input.image.reset();
        input.mesh.reset();
      }
      inputs.push_back(std::move(input));
    }

    const auto result = digitize(model, inputs);
    for (const auto& f : result.failures) err << "failed: " << f.name << ": " << f.reason << "\n";
    if (result.specimens.empty()) throw DataError("no input could be digitized");
    write_file_atomic(args.out_tps, write_tps(result.specimens));
    out << "digitized " << result.specimens.size() << " of " << inputs.size() << " inputs into " << args.out_tps
        << "\n";
    return kExitOk;
  });
}

int cmd_gpa(const GpaArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto specimens = load_specimens(args.tps);
    const auto sliders = load_sliders(args.sliders);
    const auto sample = gpa(configs_of(specimens), std::span<const SliderTriplet>(sliders));
    auto aligned = specimens;
    for (std::size_t i = 0; i < aligned.size(); ++i) {
      aligned[i].landmarks = sample.configs[i];
      aligned[i].scale.reset();
    }
    write_file_atomic(args.out_tps, write_tps(aligned));
    if (!args.mean_csv.empty()) {
      std::string csv = "index,x,y\n";
      for (Eigen::Index r = 0; r < sample.mean.rows(); ++r) {
        csv += std::to_string(r + 1) + "," + num(sample.mean(r, 0)) + "," + num(sample.mean(r, 1)) + "\n";
      }
      write_file_atomic(args.mean_csv, csv);
    }
    out << "aligned " << specimens.size() << " specimens in " << sample.iterations << " iterations"
        << (sample.converged ? "" : " (not converged)") << (sample.slid ? ", semilandmarks slid" : "") << "\n";
    return kExitOk;
  });
}

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto specimens = load_specimens(args.tps);
    const auto scores = score(specimens, load_sliders(args.sliders));
    std::string csv = "id,distinctiveness,asymmetry\n";
    for (std::size_t i = 0; i < specimens.size(); ++i) {
      csv += csv_field(specimen_id(specimens[i], i)) + "," + num(scores.distinctiveness[i]) + "," +
             num(scores.asymmetry[i]) + "\n";
    }
    write_file_atomic(args.out_csv, csv);
    out << "wrote metrics for " << specimens.size() << " specimens to " << args.out_csv << "\n";
    return kExitOk;
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ReplicatePair pair{load_specimens(args.tps_a), load_specimens(args.tps_b)};
    if (pair.rep1.size() != pair.rep2.size()) {
      throw DataError("specimen counts differ: " + args.tps_a + " has " + std::to_string(pair.rep1.size()) + ", " +
                      args.tps_b + " has " + std::to_string(pair.rep2.size()));
    }
    const auto sliders = load_sliders(args.sliders);
    const auto table = repeatability(pair, std::span<const SliderTriplet>(sliders));
    const auto a = score(pair.rep1, sliders);
    const auto b = score(pair.rep2, sliders);

    std::string anova = "quantity,value\n";
    const std::vector<std::pair<std::string, double>> rows = {
        {"individuals", table.individuals}, {"replicates", table.replicates}, {"df_among", table.df_among},
        {"df_within", table.df_within},     {"ss_among", table.ss_among},     {"ss_within", table.ss_within},
        {"ss_total", table.ss_total},       {"ms_among", table.ms_among},     {"ms_within", table.ms_within},
        {"var_among", table.var_among},     {"var_within", table.var_within}, {"repeatability", table.repeatability}};
    for (const auto& [name, value] : rows) anova += name + "," + num(value) + "\n";

    std::string metrics = "id,distinctiveness_a,distinctiveness_b,asymmetry_a,asymmetry_b\n";
    for (std::size_t i = 0; i < pair.rep1.size(); ++i) {
      metrics += csv_field(specimen_id(pair.rep1[i], i)) + "," + num(a.distinctiveness[i]) + "," +
                 num(b.distinctiveness[i]) + "," + num(a.asymmetry[i]) + "," + num(b.asymmetry[i]) + "\n";
    }

    std::string correlations = "measure,scale,n,r,lo,hi,p_value,level\n";
    std::string ellipses = "measure,level,radius,center_a,center_b,cov_aa,cov_ab,cov_bb,r\n";
    const auto add = [&](const std::string& measure, const std::vector<double>& x, const std::vector<double>& y) {
      const auto raw = pearson_ci(x, y);
      const auto logs = log_cov_ellipses(x, y);
      const auto log_ci = fisher_ci(logs.r, static_cast<int>(x.size()));
      for (const auto& [scale, c] : {std::pair{"raw", raw}, std::pair{"log", log_ci}}) {
        correlations += measure + "," + scale + "," + std::to_string(c.n) + "," + num(c.r) + "," + num(c.lo) + "," +
                        num(c.hi) + "," + num(c.p_value) + "," + num(c.level) + "\n";
      }
      for (const auto& contour : logs.contours) {
        ellipses += measure + "," + num(contour.level) + "," + num(contour.radius) + "," + num(logs.center.x()) +
                    "," + num(logs.center.y()) + "," + num(logs.cov(0, 0)) + "," + num(logs.cov(0, 1)) + "," +
                    num(logs.cov(1, 1)) + "," + num(logs.r) + "\n";
      }
      out << measure << ": r = " << num(raw.r) << " [" << num(raw.lo) << ", " << num(raw.hi) << "], log r = "
          << num(logs.r) << " [" << num(log_ci.lo) << ", " << num(log_ci.hi) << "]\n";
    };
    out << "repeatability R = " << num(table.repeatability) << "\n";
    add("distinctiveness", a.distinctiveness, b.distinctiveness);
    add("asymmetry", a.asymmetry, b.asymmetry);

    write_file_atomic(args.out_prefix + "_anova.csv", anova);
    write_file_atomic(args.out_prefix + "_metrics.csv", metrics);
    write_file_atomic(args.out_prefix + "_correlations.csv", correlations);
    write_file_atomic(args.out_prefix + "_ellipses.csv", ellipses);
    out << "wrote " << args.out_prefix << "_{anova,metrics,correlations,ellipses}.csv\n";
    return kExitOk;
  });
}

int cmd_schema(const SchemaArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!args.sliders_out.empty()) {
      write_file_atomic(args.sliders_out, write_sliders(default_sliders(args.include_midpoints)));
    }
    if (!args.pairs_out.empty()) {
      std::string csv = "first,second\n";
      for (const auto& [a, b] : pair_map().pairs) csv += std::to_string(a) + "," + std::to_string(b) + "\n";
      write_file_atomic(args.pairs_out, csv);
    }
    if (args.json) {
      out << schema_json().dump(2) << "\n";
      return kExitOk;
    }
    out << "index\tname\tkind\tside\tpartner\n";
    for (const auto& def : landmark_table()) {
      out << def.index << "\t" << (def.name.empty() ? "-" : def.name) << "\t" << to_string(def.kind) << "\t"
          << to_string(def.side) << "\t" << pair_map().partner(def.index) << "\n";
    }
    return kExitOk;
  });
}

int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.port < 0 || args.port > 65535) throw UsageError("--port must be in 0..65535");
    Project project(args.tps, args.images_dir);
    ReviewServer server(project, args.ui_dir);
    const int port = server.bind(args.host, args.port);
    if (port < 0) throw DataError("cannot listen on " + args.host + ":" + std::to_string(args.port));
    out << "serving " << project.size() << " specimens on http://" << args.host << ":" << port << "/" << std::endl;
    server.run();
    return kExitOk;
  });
}

}  // namespace facemorph
