#ifndef SEALID_TOOLS_PIPELINE_H_
#define SEALID_TOOLS_PIPELINE_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sealid/baseline.h"
#include "sealid/error.h"

namespace sealid::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 2,
  kExitArtifact = 3,
  kExitDiverged = 4,
  kExitMalformed = 5,
  kExitUsage = 64,
};

// Everything a run needs besides file paths. Reconstructible from the text
// form (flat key = value lines) plus the seed.
struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t n_apt = 1000;
  std::size_t n_drag = 2000;
  nn::TrainConfig apt;
  nn::TrainConfig cnn;
  nn::TrainConfig drag_bin;
  nn::TrainConfig drag_multi;
  nn::TrainConfig sid;
  nn::TrainConfig mid;
  std::vector<int> apt_hidden = kAptDeepHidden;
  CnnOptions cnn_options;
  LossWeights mid_weights{0.4, 0.6, 1e3, 1.0};
  bool mid_warm_start = true;
  std::vector<double> sweep_w1 = kDefaultSweepW1;
  std::size_t sweep_epochs = 300;
  std::string methods = "sid,backprop,sqp";
  OptimizeConfig optimize;

  RunConfig();

  // Throws Error(kInvalidArgument) for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  std::string to_text() const;

  // Stage sub-seed: derive_seed(seed, stage).
  std::uint64_t stage_seed(std::string_view stage) const;
};

// Default output directory: $SEALID_OUT_DIR, else ".".
std::string default_out_dir();

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct GenArgs {
  std::string out_dir;
  bool force = false;
};
int cmd_gen(const RunConfig& cfg, const GenArgs& args, Io io);

struct TrainArgs {
  std::string kind;  // apt-dnn | apt-cnn | drag-bin | drag-multi | sid | mid
  std::string data;  // dataset CSV; defaults to <data_dir>/{apt,drag}.csv
  std::string data_dir;
  std::string out_dir;
  std::string apt_model;
  std::string drag_model;
  std::string sid_model;
  bool force = false;
};
int cmd_train(const RunConfig& cfg, const TrainArgs& args, Io io);

struct InferArgs {
  std::string model;
  std::vector<double> apt;   // flattened targets given on the command line
  std::string targets_file;  // alternative: one "a,b,c" row per target
  bool verify = false;
  std::string overlay;       // design JSON drawn dashed on every SVG
  std::string out_dir;
  bool force = false;
};
int cmd_infer(const RunConfig& cfg, const InferArgs& args, Io io);

struct BenchmarkArgs {
  std::string apt_model;
  std::string sid_model;
  std::string mid_model;
  std::string data;          // test-split APT labels become the targets
  std::string targets_file;  // overrides `data`
  std::string out_dir;
  bool force = false;
};
int cmd_benchmark(const RunConfig& cfg, const BenchmarkArgs& args, Io io);

struct SweepArgs {
  std::string apt_model;
  std::string drag_model;
  std::string sid_model;
  std::string data;
  std::string out_dir;
  bool force = false;
};
int cmd_sweep(const RunConfig& cfg, const SweepArgs& args, Io io);

struct RenderArgs {
  std::string design;
  std::string overlay;
  std::size_t index = 0;  // record index when the file holds several
  std::string out;        // SVG path
  std::string pgm;        // optional raster path
  int resolution = kDefaultResolution;
  bool force = false;
};
int cmd_render(const RunConfig& cfg, const RenderArgs& args, Io io);

// Design vector from a record: {"x": {"x1": ...}} or {"x": [13 values]}, or
// an array of such records (picks `index`).
DesignVector design_from_json(const nlohmann::ordered_json& j, std::size_t index = 0);

int exit_code_for(ErrorCode code);

}  // namespace sealid::cli

#endif  // SEALID_TOOLS_PIPELINE_H_
