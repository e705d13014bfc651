#include <iostream>

#include "CLI11.hpp"
#include "pipeline.h"
#include "sealid/error.h"

using namespace sealid::cli;

int main(int argc, char** argv) {
  CLI::App app{"sealid: seal-groove inverse-design workbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_file, "Flat key = value config file");
  app.add_option("--set", overrides, "Config override key=value (repeatable)");
  app.add_option("--seed", seed, "Run seed");

  // gen
  GenArgs gen;
  std::optional<std::size_t> n_apt, n_drag;
  auto* gen_cmd = app.add_subcommand("gen", "Sample designs, label them with the oracle, write datasets");
  gen_cmd->add_option("--n-apt", n_apt, "APT dataset size before cleaning");
  gen_cmd->add_option("--n-drag", n_drag, "Drag dataset size before cleaning");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory");
  gen_cmd->add_flag("--force", gen.force, "Overwrite existing files");

  // train
  TrainArgs train;
  std::optional<std::size_t> train_epochs;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("kind", train.kind, "apt-dnn | apt-cnn | drag-bin | drag-multi | sid | mid")->required();
  train_cmd->add_option("--data", train.data, "Dataset CSV");
  train_cmd->add_option("--data-dir", train.data_dir, "Directory holding apt.csv / drag.csv");
  train_cmd->add_option("--out", train.out_dir, "Model directory");
  train_cmd->add_option("--apt-model", train.apt_model, "Trained APT regressor (sid, mid)");
  train_cmd->add_option("--drag-model", train.drag_model, "Trained drag classifier (mid)");
  train_cmd->add_option("--sid-model", train.sid_model, "Trained SID used to warm-start mid");
  train_cmd->add_option("--epochs", train_epochs, "Maximum epochs");
  train_cmd->add_flag("--force", train.force, "Overwrite existing files");

  // infer
  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Generate designs for APT targets");
  infer_cmd->add_option("--model", infer.model, "SID or MID model")->required();
  infer_cmd->add_option("--apt", infer.apt, "Target APT1 APT2 APT3 in mm (repeat for more targets)");
  infer_cmd->add_option("--targets", infer.targets_file, "CSV file, one target per row");
  infer_cmd->add_flag("--verify", infer.verify, "Evaluate generated designs with the oracle");
  infer_cmd->add_option("--overlay", infer.overlay, "Design JSON drawn dashed on each SVG");
  infer_cmd->add_option("--out", infer.out_dir, "Output directory");
  infer_cmd->add_flag("--force", infer.force, "Overwrite existing files");

  // benchmark
  BenchmarkArgs bench;
  std::optional<std::string> methods;
  auto* bench_cmd = app.add_subcommand("benchmark", "Compare inverse models with iterative optimizers");
  bench_cmd->add_option("--methods", methods, "Comma list of sid, mid, backprop, sqp");
  bench_cmd->add_option("--apt-model", bench.apt_model, "APT regressor");
  bench_cmd->add_option("--sid-model", bench.sid_model, "SID model");
  bench_cmd->add_option("--mid-model", bench.mid_model, "MID model");
  bench_cmd->add_option("--data", bench.data, "APT dataset; its test split supplies the targets");
  bench_cmd->add_option("--targets", bench.targets_file, "Target CSV (overrides --data)");
  bench_cmd->add_option("--out", bench.out_dir, "Output directory");
  bench_cmd->add_flag("--force", bench.force, "Overwrite existing files");

  // sweep
  SweepArgs sweep;
  std::optional<std::string> w1_list;
  std::optional<std::size_t> sweep_epochs;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one MID per loss weight");
  sweep_cmd->add_option("--w1", w1_list, "Comma list of w1 values in (0,1)");
  sweep_cmd->add_option("--epochs", sweep_epochs, "Maximum epochs per MID");
  sweep_cmd->add_option("--apt-model", sweep.apt_model, "APT regressor");
  sweep_cmd->add_option("--drag-model", sweep.drag_model, "Drag classifier");
  sweep_cmd->add_option("--sid-model", sweep.sid_model, "SID warm start");
  sweep_cmd->add_option("--data", sweep.data, "APT dataset");
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory");
  sweep_cmd->add_flag("--force", sweep.force, "Overwrite existing files");

  // render
  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Draw a design as SVG (and optionally PGM)");
  render_cmd->add_option("--design", render.design, "Design JSON")->required();
  render_cmd->add_option("--overlay", render.overlay, "Second design drawn dashed");
  render_cmd->add_option("--index", render.index, "Record index in a multi-record file");
  render_cmd->add_option("--out", render.out, "SVG path");
  render_cmd->add_option("--pgm", render.pgm, "PGM raster path");
  render_cmd->add_option("--resolution", render.resolution, "Raster resolution");
  render_cmd->add_flag("--force", render.force, "Overwrite existing files");

  auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  RunConfig cfg;
  try {
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw sealid::Error(sealid::ErrorCode::kInvalidArgument, "--set expects key=value");
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (n_apt) cfg.n_apt = *n_apt;
    if (n_drag) cfg.n_drag = *n_drag;
    if (methods) cfg.set("bench.methods", *methods);
    if (w1_list) cfg.set("sweep.w1", *w1_list);
    if (sweep_epochs) cfg.sweep_epochs = *sweep_epochs;
    if (train_epochs) {
      const std::string group = train.kind == "apt-dnn"      ? "apt"
                                : train.kind == "apt-cnn"    ? "cnn"
                                : train.kind == "drag-bin"   ? "drag_bin"
                                : train.kind == "drag-multi" ? "drag_multi"
                                                             : train.kind;
      cfg.set(group + ".epochs", std::to_string(*train_epochs));
    }
  } catch (const sealid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == sealid::ErrorCode::kIo ? kExitIo : kExitUsage;
  }

  const Io io{std::cout, std::cerr};
  if (*gen_cmd) return cmd_gen(cfg, gen, io);
  if (*train_cmd) return cmd_train(cfg, train, io);
  if (*infer_cmd) return cmd_infer(cfg, infer, io);
  if (*bench_cmd) return cmd_benchmark(cfg, bench, io);
  if (*sweep_cmd) return cmd_sweep(cfg, sweep, io);
  if (*render_cmd) return cmd_render(cfg, render, io);
  if (*config_cmd) {
    std::cout << cfg.to_text();
    return kExitOk;
  }
  return kExitUsage;
}
