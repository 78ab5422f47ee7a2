#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace facemorph {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

struct SynthArgs {
  std::string out_dir;
  int count = 100;
  double spread = 0.1;
  std::uint64_t seed = 0;
  int canvas = 256;
  int mesh_size = 468;
  /// Also write a noisy second replicate of the truths ("replicate.tps").
  /// Negative selects the SD calibrated for a repeatability near 0.97.
  std::optional<double> replicate_noise_sd;
};

struct TrainArgs {
  std::string data_dir;
  std::string truth_tps;  // defaults to <data_dir>/truth.tps
  std::string out_model;
  int epochs_projection = 150;
  int epochs_refiner = 20;
  int draws = 8;
  double jitter = 4.0;
  std::uint64_t seed = 0;
};

struct DigitizeArgs {
  std::string model;
  std::string input_dir;
  std::string out_tps;
};

struct GpaArgs {
  std::string tps;
  std::string out_tps;
  std::string sliders;  // optional CSV
  std::string mean_csv;  // optional consensus output: index,x,y
};

struct MetricsArgs {
  std::string tps;
  std::string out_csv;
  std::string sliders;
};

struct CompareArgs {
  std::string tps_a;
  std::string tps_b;
  std::string out_prefix;
  std::string sliders;
};

struct SchemaArgs {
  bool json = false;
  std::string sliders_out;  // write the default slider CSV here
  std::string pairs_out;    // write the pair map as first,second CSV
  bool include_midpoints = false;
};

struct ServeArgs {
  std::string tps;
  std::string images_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
};

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_digitize(const DigitizeArgs& args, std::ostream& out, std::ostream& err);
int cmd_gpa(const GpaArgs& args, std::ostream& out, std::ostream& err);
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);
int cmd_schema(const SchemaArgs& args, std::ostream& out, std::ostream& err);
/// Blocks until the process is interrupted.
int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err);

}  // namespace facemorph
