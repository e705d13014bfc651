#include "pipeline.h"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "sealid/csv.h"
#include "sealid/error.h"

namespace sealid::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidArgument, "bad value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig::RunConfig()
    : apt(default_apt_config()),
      cnn(default_apt_config()),
      drag_bin(default_drag_binary_config()),
      drag_multi(default_drag_multiclass_config()),
      sid(default_sid_config()),
      mid(default_mid_config()) {}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const { return derive_seed(seed, stage); }

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const std::string group = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    nn::TrainConfig* tc = nullptr;
    if (group == "apt") tc = &apt;
    if (group == "cnn") tc = &cnn;
    if (group == "drag_bin") tc = &drag_bin;
    if (group == "drag_multi") tc = &drag_multi;
    if (group == "sid") tc = &sid;
    if (group == "mid") tc = &mid;
    if (tc != nullptr) {
      if (field == "lr") return void(tc->learning_rate = parse_double(key, value));
      if (field == "batch") return void(tc->batch_size = parse_uint(key, value));
      if (field == "epochs") return void(tc->max_epochs = parse_uint(key, value));
      if (field == "patience") return void(tc->early_stop_patience = parse_uint(key, value));
    }
    if (key == "apt.hidden") {
      apt_hidden.clear();
      for (const auto& s : split_list(value)) apt_hidden.push_back(static_cast<int>(parse_uint(key, s)));
      if (apt_hidden.empty()) bad_value(key, value);
      return;
    }
    if (key == "cnn.resolution") return void(cnn_options.resolution = static_cast<int>(parse_uint(key, value)));
    if (key == "cnn.design_inputs") return void(cnn_options.use_design_inputs = parse_bool(key, value));
    if (key == "mid.w1") {
      const double w1 = parse_double(key, value);
      if (!(w1 >= 0.0 && w1 <= 1.0)) bad_value(key, value);
      mid_weights.w1 = w1;
      mid_weights.w2 = 1.0 - w1;
      return;
    }
    if (key == "mid.kappa_apt") return void(mid_weights.kappa_apt = parse_double(key, value));
    if (key == "mid.kappa_drag") return void(mid_weights.kappa_drag = parse_double(key, value));
    if (key == "mid.warm_start") return void(mid_warm_start = parse_bool(key, value));
    if (key == "sweep.w1") {
      sweep_w1.clear();
      for (const auto& s : split_list(value)) sweep_w1.push_back(parse_double(key, s));
      if (sweep_w1.empty()) bad_value(key, value);
      return;
    }
    if (key == "sweep.epochs") return void(sweep_epochs = parse_uint(key, value));
    if (key == "bench.methods") {
      parse_methods(value);
      methods = value;
      return;
    }
    if (key == "bench.backprop_lr") return void(optimize.backprop_lr = parse_double(key, value));
    if (key == "bench.backprop_iters") return void(optimize.backprop_max_iters = parse_uint(key, value));
    if (key == "bench.sqp_iters") return void(optimize.sqp_max_iters = parse_uint(key, value));
    if (key == "bench.starts") return void(optimize.starts = parse_uint(key, value));
  } else {
    if (key == "seed") return void(seed = parse_uint(key, value));
    if (key == "n_apt") return void(n_apt = parse_uint(key, value));
    if (key == "n_drag") return void(n_drag = parse_uint(key, value));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::stringstream ss(csv::read_file(path));
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, path + ":" + std::to_string(n) + ": expected key = value");
    }
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("seed", std::to_string(seed));
  kv("n_apt", std::to_string(n_apt));
  kv("n_drag", std::to_string(n_drag));
  const std::pair<const char*, const nn::TrainConfig*> stages[] = {
      {"apt", &apt}, {"cnn", &cnn}, {"drag_bin", &drag_bin}, {"drag_multi", &drag_multi},
      {"sid", &sid}, {"mid", &mid}};
  for (const auto& [name, tc] : stages) {
    const std::string g(name);
    kv(g + ".lr", csv::format_double(tc->learning_rate));
    kv(g + ".batch", std::to_string(tc->batch_size));
    kv(g + ".epochs", std::to_string(tc->max_epochs));
    kv(g + ".patience", std::to_string(tc->early_stop_patience));
  }
  kv("apt.hidden", join(apt_hidden, [](int v) { return std::to_string(v); }));
  kv("cnn.resolution", std::to_string(cnn_options.resolution));
  kv("cnn.design_inputs", cnn_options.use_design_inputs ? "true" : "false");
  kv("mid.w1", csv::format_double(mid_weights.w1));
  kv("mid.kappa_apt", csv::format_double(mid_weights.kappa_apt));
  kv("mid.kappa_drag", csv::format_double(mid_weights.kappa_drag));
  kv("mid.warm_start", mid_warm_start ? "true" : "false");
  kv("sweep.w1", join(sweep_w1, [](double v) { return csv::format_double(v); }));
  kv("sweep.epochs", std::to_string(sweep_epochs));
  kv("bench.methods", methods);
  kv("bench.backprop_lr", csv::format_double(optimize.backprop_lr));
  kv("bench.backprop_iters", std::to_string(optimize.backprop_max_iters));
  kv("bench.sqp_iters", std::to_string(optimize.sqp_max_iters));
  kv("bench.starts", std::to_string(optimize.starts));
  return out;
}

std::string default_out_dir() {
  const char* env = std::getenv("SEALID_OUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kDiverged:
      return kExitDiverged;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRangeTarget:
      return kExitMalformed;
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kCorruptRow:
    case ErrorCode::kDegenerateColumn:
    case ErrorCode::kMissingNormSpec:
    case ErrorCode::kIncompatibleForward:
    case ErrorCode::kNormSpecMismatch:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kEmptyClass:
    case ErrorCode::kTooFewRows:
      return kExitArtifact;
    default:
      return 1;
  }
}

// ---------------------------------------------------------------- helpers

namespace {

class Failure {
 public:
  Failure(int code, std::string message) : code_(code), message_(std::move(message)) {}
  int code() const { return code_; }
  const std::string& message() const { return message_; }

 private:
  int code_;
  std::string message_;
};

std::string out_dir_or_default(const std::string& dir) { return dir.empty() ? default_out_dir() : dir; }

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_artifact(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path)) {
    throw Failure(kExitArtifact, "missing " + what + ": " + (path.empty() ? "(no path)" : path));
  }
}

void prepare_outputs(const std::string& dir, const std::vector<std::string>& files, bool force) {
  for (const auto& f : files) {
    if (fs::exists(f) && !force) {
      throw Failure(kExitIo, "refusing to overwrite " + f + " (pass --force)");
    }
  }
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
  if (ec) throw Failure(kExitIo, "cannot create directory " + dir + ": " + ec.message());
}

template <typename Body>
int guarded(Io io, Body body) {
  try {
    return body();
  } catch (const Failure& f) {
    io.err << "error: " << f.message() << "\n";
    return f.code();
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return 1;
  }
}

nlohmann::ordered_json load_json(const std::string& path, int code_on_error) {
  try {
    return nlohmann::ordered_json::parse(csv::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Failure(code_on_error, path + " is not valid JSON: " + e.what());
  }
}

ForwardModel load_forward(const std::string& path, const std::string& what) {
  require_artifact(path, what);
  return ForwardModel::from_document(nn::load_model(path));
}

InverseModel load_inverse(const std::string& path, const std::string& what) {
  require_artifact(path, what);
  return InverseModel::from_document(nn::load_model(path));
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(1) + "\n"; }

nlohmann::ordered_json evaluation_json(const InverseEvaluation& ev) {
  return {{"surrogate", ev.surrogate.to_json()},
          {"oracle", ev.oracle.to_json()},
          {"loss_apt", ev.losses.loss_apt},
          {"loss_drag", ev.losses.loss_drag},
          {"drag_free_rate", ev.drag_free_rate},
          {"invalid_fraction", ev.invalid_fraction}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- gen

int cmd_gen(const RunConfig& cfg, const GenArgs& args, Io io) {
  return guarded(io, [&] {
    if (cfg.n_apt == 0 || cfg.n_drag == 0) {
      throw Failure(kExitUsage, "--n-apt and --n-drag must be positive");
    }
    const std::string dir = out_dir_or_default(args.out_dir);
    const std::string apt_csv = join_path(dir, "apt.csv");
    const std::string drag_csv = join_path(dir, "drag.csv");
    prepare_outputs(dir, {apt_csv, sidecar_path(apt_csv), drag_csv, sidecar_path(drag_csv)}, args.force);

    const RawDataset raw_apt = generate_labeled({cfg.n_apt, cfg.stage_seed("doe-apt")}, Task::kApt);
    const RawDataset raw_drag = generate_labeled({cfg.n_drag, cfg.stage_seed("doe-drag")}, Task::kDrag);
    const LabeledDataset apt = build_dataset(raw_apt, cfg.stage_seed("split-apt"));
    const LabeledDataset drag = build_dataset(raw_drag, cfg.stage_seed("split-drag"));
    save_dataset(apt, apt_csv);
    save_dataset(drag, drag_csv);

    for (const auto* ds : {&apt, &drag}) {
      io.out << dataset_task_name(ds->task) << ": requested " << ds->meta.n_requested << ", kept "
             << ds->rows.size() << ", dropped " << ds->meta.n_dropped << " (train "
             << ds->count(Split::kTrain) << ", val " << ds->count(Split::kVal) << ", test "
             << ds->count(Split::kTest) << ")\n";
    }
    io.out << "wrote " << apt_csv << " and " << drag_csv << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------- train

namespace {

struct TrainOutputs {
  std::string model, metrics, history;
};

void write_train_outputs(const TrainOutputs& o, const nn::ModelDocument& doc,
                         const nlohmann::ordered_json& metrics, const nn::TrainHistory& h) {
  nn::save_model(doc, o.model);
  csv::write_file(o.metrics, dump(metrics));
  csv::write_file(o.history, h.to_csv());
}

nlohmann::ordered_json forward_metrics(const std::string& kind, const PartitionMetrics& m,
                                       const nn::TrainHistory& h, std::uint64_t seed) {
  return {{"kind", kind},
          {"seed", seed},
          {"epochs_run", h.epochs.size()},
          {"best_epoch", h.best_epoch},
          {"best_val_loss", h.best_val_loss},
          {"val", m.val.to_json()},
          {"test", m.test.to_json()}};
}

}  // namespace

int cmd_train(const RunConfig& cfg, const TrainArgs& args, Io io) {
  return guarded(io, [&]() -> int {
    static const std::vector<std::string> kKinds{"apt-dnn", "apt-cnn", "drag-bin", "drag-multi", "sid", "mid"};
    if (std::find(kKinds.begin(), kKinds.end(), args.kind) == kKinds.end()) {
      throw Failure(kExitUsage, "unknown model kind '" + args.kind + "'");
    }
    const std::string dir = out_dir_or_default(args.out_dir);
    const std::string data_dir = args.data_dir.empty() ? dir : args.data_dir;
    const bool drag_kind = args.kind == "drag-bin" || args.kind == "drag-multi";
    const std::string data =
        !args.data.empty() ? args.data : join_path(data_dir, drag_kind ? "drag.csv" : "apt.csv");
    const std::string apt_model = args.apt_model.empty() ? join_path(dir, "apt-dnn.json") : args.apt_model;
    const std::string drag_model = args.drag_model.empty() ? join_path(dir, "drag-bin.json") : args.drag_model;
    const std::string sid_model = args.sid_model.empty() ? join_path(dir, "sid.json") : args.sid_model;

    require_artifact(data, "dataset");
    if (args.kind == "sid" || args.kind == "mid") require_artifact(apt_model, "APT model");
    if (args.kind == "mid") {
      require_artifact(drag_model, "drag model");
      if (cfg.mid_warm_start) require_artifact(sid_model, "SID model (warm start)");
    }

    const TrainOutputs outs{join_path(dir, args.kind + ".json"), join_path(dir, args.kind + ".metrics.json"),
                            join_path(dir, args.kind + ".history.csv")};
    prepare_outputs(dir, {outs.model, outs.metrics, outs.history}, args.force);

    const LabeledDataset ds = load_dataset(data);
    const std::uint64_t seed = cfg.stage_seed("train-" + args.kind);
    const auto t0 = std::chrono::steady_clock::now();

    if (args.kind == "apt-dnn" || args.kind == "drag-bin" || args.kind == "drag-multi") {
      ForwardModel m;
      if (args.kind == "apt-dnn") {
        nn::TrainConfig tc = cfg.apt;
        tc.seed = seed;
        m = train_apt_dnn(ds, tc, cfg.apt_hidden);
      } else if (args.kind == "drag-bin") {
        nn::TrainConfig tc = cfg.drag_bin;
        tc.seed = seed;
        m = train_drag_binary(ds, tc);
      } else {
        nn::TrainConfig tc = cfg.drag_multi;
        tc.seed = seed;
        m = train_drag_multiclass(ds, tc);
      }
      write_train_outputs(outs, m.to_document(), forward_metrics(args.kind, m.metrics, m.history, seed),
                          m.history);
      io.out << args.kind << ": " << m.history.epochs.size() << " epochs (best " << m.history.best_epoch
             << "), test mae " << m.metrics.test.mae << ", rmse " << m.metrics.test.rmse;
      if (m.metrics.test.r2) io.out << ", r2 " << *m.metrics.test.r2;
      if (m.metrics.test.accuracy_percent) io.out << ", accuracy " << *m.metrics.test.accuracy_percent << "%";
      io.out << " [" << seconds_since(t0) << " s]\n";
      return kExitOk;
    }

    if (args.kind == "apt-cnn") {
      nn::TrainConfig tc = cfg.cnn;
      tc.seed = seed;
      const CnnModel m = train_apt_cnn(ds, tc, cfg.cnn_options);
      write_train_outputs(outs, m.to_document(), forward_metrics(args.kind, m.metrics, m.history, seed),
                          m.history);
      io.out << "apt-cnn: " << m.history.epochs.size() << " epochs, test mae " << m.metrics.test.mae
             << ", r2 " << m.metrics.test.r2.value_or(0.0) << " [" << seconds_since(t0) << " s]\n";
      return kExitOk;
    }

    const ForwardModel apt = load_forward(apt_model, "APT model");
    InverseModel inv;
    if (args.kind == "sid") {
      inv = build_sid(apt, seed);
      nn::TrainConfig tc = cfg.sid;
      tc.seed = seed;
      train_sid(inv, ds, tc);
    } else {
      const ForwardModel drag = load_forward(drag_model, "drag model");
      std::optional<InverseModel> warm;
      if (cfg.mid_warm_start) warm = load_inverse(sid_model, "SID model (warm start)");
      inv = build_mid(apt, drag, seed, cfg.mid_weights, warm ? &*warm : nullptr);
      nn::TrainConfig tc = cfg.mid;
      tc.seed = seed;
      train_mid(inv, ds, tc);
    }
    const InverseEvaluation ev = evaluate_inverse(inv, ds.apt_labels(Split::kTest, false));
    nlohmann::ordered_json metrics{{"kind", args.kind},
                                   {"seed", seed},
                                   {"epochs_run", inv.history.epochs.size()},
                                   {"best_epoch", inv.history.best_epoch},
                                   {"best_val_loss", inv.history.best_val_loss},
                                   {"test", evaluation_json(ev)}};
    write_train_outputs(outs, inv.to_document(), metrics, inv.history);
    io.out << args.kind << ": " << inv.history.epochs.size() << " epochs (best " << inv.history.best_epoch
           << "), test surrogate r2 " << ev.surrogate.r2.value_or(0.0) << ", mae " << ev.surrogate.mae
           << " mm; oracle mae " << ev.oracle.mae << " mm; drag-free " << 100.0 * ev.drag_free_rate
           << "%; invalid " << 100.0 * ev.invalid_fraction << "% [" << seconds_since(t0) << " s]\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------- infer

DesignVector design_from_json(const nlohmann::ordered_json& j, std::size_t index) {
  const nlohmann::ordered_json* rec = &j;
  if (j.is_array()) {
    if (index >= j.size()) throw Error(ErrorCode::kInvalidArgument, "design index out of range");
    rec = &j[index];
  }
  if (!rec->is_object() || !rec->contains("x")) {
    throw Error(ErrorCode::kInvalidArgument, "design JSON needs an \"x\" field");
  }
  const auto& x = rec->at("x");
  DesignVector out{};
  try {
    for (std::size_t i = 0; i < kNumDesignVars; ++i) {
      out[i] = x.is_array() ? x.at(i).get<double>()
                            : x.at(std::string(kDesignVariables[i].name)).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("design x: ") + e.what());
  }
  return out;
}

int cmd_infer(const RunConfig&, const InferArgs& args, Io io) {
  return guarded(io, [&]() -> int {
    if (args.apt.empty() == args.targets_file.empty()) {
      throw Failure(kExitUsage, "give exactly one of --apt or --targets");
    }
    require_artifact(args.model, "inverse model");
    InverseModel model;
    try {
      model = InverseModel::from_document(nn::load_model(args.model));
    } catch (const Error& e) {
      throw Failure(kExitArtifact, std::string("invalid model: ") + e.what());
    }

    Matrix targets;
    if (!args.apt.empty()) {
      if (args.apt.size() % 3 != 0) {
        throw Failure(kExitMalformed, "--apt takes 3 values per target, got " + std::to_string(args.apt.size()));
      }
      targets.resize(static_cast<Eigen::Index>(args.apt.size() / 3), 3);
      for (std::size_t i = 0; i < args.apt.size(); ++i) {
        targets(static_cast<Eigen::Index>(i / 3), static_cast<Eigen::Index>(i % 3)) = args.apt[i];
      }
    } else {
      require_artifact(args.targets_file, "targets file");
      try {
        targets = parse_targets(csv::read_file(args.targets_file));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kIo) throw;
        throw Failure(kExitMalformed, e.what());
      }
      if (targets.rows() == 0) throw Failure(kExitMalformed, "targets file is empty");
    }

    std::optional<SealGeometry> overlay;
    if (!args.overlay.empty()) {
      require_artifact(args.overlay, "overlay design");
      overlay = compute_points(design_from_json(load_json(args.overlay, kExitMalformed)));
    }

    const std::string dir = out_dir_or_default(args.out_dir);
    std::vector<std::string> files{join_path(dir, "designs.json")};
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      files.push_back(join_path(dir, "design-" + std::to_string(i) + ".svg"));
    }
    prepare_outputs(dir, files, args.force);

    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      const oracle::Apt t{targets(i, 0), targets(i, 1), targets(i, 2)};
      const DesignRecord rec = infer_design(model, t, args.verify);
      if (rec.warning) io.err << "warning: target " << i << ": " << *rec.warning << "\n";
      nlohmann::ordered_json j = rec.to_json();
      const std::string svg_path = files[static_cast<std::size_t>(i) + 1];
      if (rec.violations.empty()) {
        csv::write_file(svg_path, to_svg(compute_points(rec.x), overlay));
        j["svg"] = svg_path;
      } else {
        j["svg"] = nullptr;
      }
      io.out << "target " << i << " [" << t[0] << ", " << t[1] << ", " << t[2] << "] -> surrogate ["
             << rec.surrogate_apt[0] << ", " << rec.surrogate_apt[1] << ", " << rec.surrogate_apt[2] << "]";
      if (rec.drag_probability) io.out << ", drag p " << *rec.drag_probability;
      if (rec.oracle) {
        io.out << "; oracle [" << rec.oracle->apt[0] << ", " << rec.oracle->apt[1] << ", "
               << rec.oracle->apt[2] << "], drag " << (rec.oracle->drag.amplified ? "amplified" : "free");
      }
      if (!rec.violations.empty()) io.out << "; INVALID geometry (" << rec.violations.front().message << ")";
      io.out << " in " << rec.seconds << " s\n";
      records.push_back(std::move(j));
    }
    csv::write_file(files.front(), dump(records));
    return kExitOk;
  });
}

// ---------------------------------------------------------------- benchmark

int cmd_benchmark(const RunConfig& cfg, const BenchmarkArgs& args, Io io) {
  return guarded(io, [&]() -> int {
    std::vector<Method> methods;
    try {
      methods = parse_methods(cfg.methods);
    } catch (const Error& e) {
      throw Failure(kExitUsage, e.what());
    }
    const std::string dir = out_dir_or_default(args.out_dir);
    const std::string apt_path = args.apt_model.empty() ? join_path(dir, "apt-dnn.json") : args.apt_model;
    const ForwardModel apt = load_forward(apt_path, "APT model");

    std::optional<InverseModel> sid, mid;
    const bool wants_sid = std::find(methods.begin(), methods.end(), Method::kSid) != methods.end();
    const bool wants_mid = std::find(methods.begin(), methods.end(), Method::kMid) != methods.end();
    if (wants_sid) sid = load_inverse(args.sid_model.empty() ? join_path(dir, "sid.json") : args.sid_model, "SID model");
    if (wants_mid) mid = load_inverse(args.mid_model.empty() ? join_path(dir, "mid.json") : args.mid_model, "MID model");

    Matrix targets;
    if (!args.targets_file.empty()) {
      require_artifact(args.targets_file, "targets file");
      try {
        targets = parse_targets(csv::read_file(args.targets_file));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kIo) throw;
        throw Failure(kExitMalformed, e.what());
      }
    } else {
      const std::string data = args.data.empty() ? join_path(dir, "apt.csv") : args.data;
      require_artifact(data, "dataset");
      targets = load_dataset(data).apt_labels(Split::kTest, false);
    }

    const std::string json_path = join_path(dir, "benchmark.json");
    const std::string csv_path = join_path(dir, "benchmark.csv");
    const std::string svg_path = join_path(dir, "benchmark.svg");
    const std::string targets_path = join_path(dir, "benchmark-targets.csv");
    prepare_outputs(dir, {json_path, csv_path, svg_path, targets_path}, args.force);
    csv::write_file(targets_path, targets_text(targets));

    OptimizeConfig oc = cfg.optimize;
    oc.seed = cfg.stage_seed("benchmark");
    const BenchmarkModels models{&apt, sid ? &*sid : nullptr, mid ? &*mid : nullptr};
    const BenchmarkReport report = run_benchmark(models, targets, methods, oc);
    csv::write_file(json_path, dump(report.to_json()));
    csv::write_file(csv_path, report.to_csv());
    csv::write_file(svg_path, report.to_svg());

    io.out << "targets " << targets.rows() << ", checksum " << report.target_checksum << "\n";
    for (const auto& s : report.methods) {
      io.out << method_name(s.method) << ": mae " << s.mae << ", rmse " << s.rmse << ", r2 " << s.r2
             << ", oracle mae " << s.mae_oracle << ", median " << s.median_seconds << " s, failed "
             << s.n_failed << "\n";
    }
    for (const auto& n : report.notes) io.out << "ordering " << n << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const RunConfig& cfg, const SweepArgs& args, Io io) {
  return guarded(io, [&]() -> int {
    const std::string dir = out_dir_or_default(args.out_dir);
    const std::string data = args.data.empty() ? join_path(dir, "apt.csv") : args.data;
    const std::string apt_path = args.apt_model.empty() ? join_path(dir, "apt-dnn.json") : args.apt_model;
    const std::string drag_path = args.drag_model.empty() ? join_path(dir, "drag-bin.json") : args.drag_model;
    const std::string sid_path = args.sid_model.empty() ? join_path(dir, "sid.json") : args.sid_model;
    require_artifact(data, "dataset");
    const ForwardModel apt = load_forward(apt_path, "APT model");
    const ForwardModel drag = load_forward(drag_path, "drag model");
    std::optional<InverseModel> warm;
    if (cfg.mid_warm_start) warm = load_inverse(sid_path, "SID model (warm start)");

    const std::string out = join_path(dir, "sweep.csv");
    prepare_outputs(dir, {out}, args.force);
    nn::TrainConfig tc = cfg.mid;
    tc.max_epochs = cfg.sweep_epochs;
    tc.seed = cfg.stage_seed("sweep");
    const SweepTable table =
        weight_sweep(apt, drag, load_dataset(data), cfg.sweep_w1, tc, warm ? &*warm : nullptr);
    csv::write_file(out, table.to_csv());
    io.out << table.to_csv();
    return kExitOk;
  });
}

// ---------------------------------------------------------------- render

int cmd_render(const RunConfig&, const RenderArgs& args, Io io) {
  return guarded(io, [&]() -> int {
    if (args.out.empty() && args.pgm.empty()) throw Failure(kExitUsage, "give --out and/or --pgm");
    require_artifact(args.design, "design file");
    const DesignVector x = design_from_json(load_json(args.design, kExitMalformed), args.index);
    const auto problems = validate(x);
    if (!problems.empty()) throw Failure(kExitMalformed, "invalid design: " + problems.front().message);
    std::optional<SealGeometry> overlay;
    if (!args.overlay.empty()) {
      require_artifact(args.overlay, "overlay design");
      overlay = compute_points(design_from_json(load_json(args.overlay, kExitMalformed)));
    }
    std::vector<std::string> files;
    if (!args.out.empty()) files.push_back(args.out);
    if (!args.pgm.empty()) files.push_back(args.pgm);
    for (const auto& f : files) prepare_outputs(fs::path(f).parent_path().string(), {f}, args.force);

    const SealGeometry g = compute_points(x);
    if (!args.out.empty()) {
      csv::write_file(args.out, to_svg(g, overlay));
      io.out << "wrote " << args.out << "\n";
    }
    if (!args.pgm.empty()) {
      csv::write_file(args.pgm, to_pgm(rasterize(g, args.resolution)));
      io.out << "wrote " << args.pgm << "\n";
    }
    return kExitOk;
  });
}

}  // namespace sealid::cli
