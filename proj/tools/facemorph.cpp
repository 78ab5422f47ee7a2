#include <iostream>

#include <CLI11.hpp>

#include "facemorph/commands.hpp"

using namespace facemorph;

int main(int argc, char** argv) {
  CLI::App app{"Facial landmark digitizing and shape analysis"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic faces with images, meshes and true landmarks");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of faces")->capture_default_str();
  synth_cmd->add_option("--spread", synth.spread, "SD of the shape multipliers")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--canvas", synth.canvas, "Image side in pixels")->capture_default_str();
  synth_cmd->add_option("--mesh-size", synth.mesh_size, "Dense mesh points per face")->capture_default_str();
  synth_cmd->add_option("--replicate-noise", synth.replicate_noise_sd,
                        "Also write replicate.tps with this landmark noise SD; negative picks the calibrated SD");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the projection, then the patch refiner");
  train_cmd->add_option("--data", train.data_dir, "Directory of <name>.pgm and <name>.mesh.json files")->required();
  train_cmd->add_option("--truth", train.truth_tps, "True landmarks (default: <data>/truth.tps)");
  train_cmd->add_option("--out", train.out_model, "Model file to write")->required();
  train_cmd->add_option("--epochs-projection", train.epochs_projection)->capture_default_str();
  train_cmd->add_option("--epochs-refiner", train.epochs_refiner, "0 keeps a zero refiner")->capture_default_str();
  train_cmd->add_option("--draws", train.draws, "Jittered refiner samples per landmark and face")
      ->capture_default_str();
  train_cmd->add_option("--jitter", train.jitter, "Refiner sampling jitter in pixels")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();

  DigitizeArgs dig;
  auto* dig_cmd = app.add_subcommand("digitize", "Place the 72 landmarks on every image in a folder");
  dig_cmd->add_option("--model", dig.model, "Model file")->required();
  dig_cmd->add_option("--input", dig.input_dir, "Directory of <name>.pgm and <name>.mesh.json files")->required();
  dig_cmd->add_option("--out", dig.out_tps, "TPS file to write")->required();

  GpaArgs gpa;
  auto* gpa_cmd = app.add_subcommand("gpa", "Generalized Procrustes alignment of a TPS file");
  gpa_cmd->add_option("--tps", gpa.tps, "Input TPS")->required();
  gpa_cmd->add_option("--out", gpa.out_tps, "Aligned TPS to write")->required();
  gpa_cmd->add_option("--sliders", gpa.sliders, "Slider CSV (before,slide,after)");
  gpa_cmd->add_option("--mean", gpa.mean_csv, "Write the consensus as CSV (index,x,y)");

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Distinctiveness and asymmetry per specimen");
  metrics_cmd->add_option("--tps", metrics.tps, "Input TPS")->required();
  metrics_cmd->add_option("--out", metrics.out_csv, "CSV to write")->required();
  metrics_cmd->add_option("--sliders", metrics.sliders, "Slider CSV (before,slide,after)");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Repeatability and metric agreement of two digitizations");
  compare_cmd->add_option("--a", compare.tps_a, "First replicate TPS")->required();
  compare_cmd->add_option("--b", compare.tps_b, "Second replicate TPS")->required();
  compare_cmd->add_option("--out-prefix", compare.out_prefix, "Prefix of the CSV outputs")->required();
  compare_cmd->add_option("--sliders", compare.sliders, "Slider CSV (before,slide,after)");

  SchemaArgs schema;
  auto* schema_cmd = app.add_subcommand("schema", "Print the 72-landmark schema");
  schema_cmd->add_flag("--json", schema.json, "Print JSON instead of a table");
  schema_cmd->add_option("--sliders-out", schema.sliders_out, "Write the default slider CSV here");
  schema_cmd->add_option("--pairs-out", schema.pairs_out, "Write the bilateral pair map CSV here");
  schema_cmd->add_flag("--midpoint-sliders", schema.include_midpoints, "Include constructed midpoints as sliders");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the landmark review API and UI");
  serve_cmd->add_option("--tps", serve.tps, "TPS file under review")->required();
  serve_cmd->add_option("--images", serve.images_dir, "Image directory")->required();
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "0 picks a free port")->capture_default_str();
  serve_cmd->add_option("--ui", serve.ui_dir, "Directory of built review-UI assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*synth_cmd) return cmd_synth(synth, out, err);
  if (*train_cmd) return cmd_train(train, out, err);
  if (*dig_cmd) return cmd_digitize(dig, out, err);
  if (*gpa_cmd) return cmd_gpa(gpa, out, err);
  if (*metrics_cmd) return cmd_metrics(metrics, out, err);
  if (*compare_cmd) return cmd_compare(compare, out, err);
  if (*schema_cmd) return cmd_schema(schema, out, err);
  if (*serve_cmd) return cmd_serve(serve, out, err);
  return kExitUsage;
}
