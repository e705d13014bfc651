// Runs the end-to-end acceptance checks and prints one PASS/FAIL line each.
//
//   acceptance --work DIR [--only 1,3,7]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geometry_oracle.h"
#include "gradcheck.h"
#include "pipeline.h"
#include "sealid/csv.h"
#include "test_util.h"

using namespace sealid;
using namespace sealid::cli;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) { return csv::read_file(p.string()); }

nlohmann::ordered_json load_json(const fs::path& p) { return nlohmann::ordered_json::parse(slurp(p)); }

// ---------------------------------------------------------------- pipeline

struct Run {
  fs::path dir;
  bool ok = false;
  std::string failure;
  std::map<std::string, double> seconds;
};

Run run_pipeline(const fs::path& dir) {
  Run run;
  run.dir = dir;
  fs::create_directories(dir);
  std::ofstream log(dir / "pipeline.log");
  const Io io{log, log};
  const RunConfig cfg;

  auto stage = [&](const std::string& name, const std::function<int()>& fn) {
    if (!run.failure.empty()) return;
    const auto t0 = Clock::now();
    const int code = fn();
    run.seconds[name] = since(t0);
    log.flush();
    if (code != kExitOk) run.failure = name + " exited with " + std::to_string(code);
  };
  auto train = [&](const std::string& kind, const RunConfig& c, const fs::path& out, const fs::path& data) {
    TrainArgs t;
    t.kind = kind;
    t.out_dir = out.string();
    t.data = data.string();
    t.force = true;
    return cmd_train(c, t, io);
  };

  stage("gen", [&] { return cmd_gen(cfg, {dir.string(), true}, io); });
  for (const char* kind : {"apt-dnn", "drag-bin", "drag-multi", "sid", "mid"}) {
    const bool drag = std::string(kind).rfind("drag", 0) == 0;
    stage(kind, [&] { return train(kind, cfg, dir, dir / (drag ? "drag.csv" : "apt.csv")); });
  }
  stage("apt-baseline", [&] {
    RunConfig base = cfg;
    base.apt_hidden = kAptBaselineHidden;
    fs::create_directories(dir / "baseline");
    return train("apt-dnn", base, dir / "baseline", dir / "apt.csv");
  });
  stage("benchmark", [&] {
    BenchmarkArgs b;
    b.out_dir = dir.string();
    b.force = true;
    return cmd_benchmark(cfg, b, io);
  });
  stage("sweep", [&] {
    SweepArgs s;
    s.out_dir = dir.string();
    s.force = true;
    return cmd_sweep(cfg, s, io);
  });
  run.ok = run.failure.empty();
  return run;
}

Result require_run(const Run& run) {
  return {false, "pipeline failed: " + run.failure + " (see " + (run.dir / "pipeline.log").string() + ")"};
}

// ---------------------------------------------------------------- criteria

Result gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_kind;
  std::size_t checks = 0;
  for (const auto& kind : testing::layer_kind_factories()) {
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
      const testing::GradCheck g = testing::grad_check_seed(kind.make, seed, kind.distinct);
      const double e = std::max(g.input_error, g.param_error);
      if (!(e <= worst)) {
        worst = e;
        worst_kind = kind.name;
      }
      ++checks;
    }
  }
  const double secs = since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("%zu checks over 8 layer kinds x 24 seeds, max rel error %.2e (%s), %.1f s", checks, worst,
              worst_kind.c_str(), secs)};
}

Result oracle_invariants() {
  Rng rng(20240101);
  std::size_t ordered = 0;
  for (int i = 0; i < 10000; ++i) {
    NormalizedDesign d;
    d.u = testing::random_u(rng);
    const oracle::Apt a = oracle::eval_apt(d);
    if (a[0] < a[1] && a[1] < a[2]) ++ordered;
  }
  const LhsSample plan = lhs_sample({2000, derive_seed(42, "doe-drag")});
  std::size_t pos = 0;
  for (const auto& p : plan.points) pos += oracle::eval_drag(p).amplified ? 1 : 0;
  const double rate = static_cast<double>(pos) / static_cast<double>(plan.points.size());

  NormalizedDesign mid;
  mid.u.fill(0.5);
  const oracle::Apt m = oracle::eval_apt(mid);
  const double expected[3] = {0.795875, 2.158091, 3.150000};
  double dev = 0.0;
  for (int k = 0; k < 3; ++k) dev = std::max(dev, std::abs(m[k] - expected[k]));

  return {ordered == 10000 && rate >= 0.30 && rate <= 0.70 && dev <= 1e-6,
          fmt("ordered %zu/10000; drag positive rate %.3f on a %zu-point LHS; midpoint (%.6f, %.6f, %.6f), "
              "max dev %.1e",
              ordered, rate, plan.points.size(), m[0], m[1], m[2], dev)};
}

Result forward_quality(const Run& run) {
  if (!run.ok) return require_run(run);
  const auto deep = load_json(run.dir / "apt-dnn.metrics.json").at("test");
  const auto base = load_json(run.dir / "baseline" / "apt-dnn.metrics.json").at("test");
  const double r2 = deep.at("r2").get<double>();
  const double rmse = deep.at("rmse").get<double>();
  const double base_rmse = base.at("rmse").get<double>();
  const double secs = run.seconds.at("apt-dnn") + run.seconds.at("apt-baseline");
  return {r2 >= 0.90 && rmse < base_rmse && secs < 300.0,
          fmt("deep test R2 %.4f, RMSE %.4f mm vs 1x128 baseline RMSE %.4f mm; training %.1f s", r2, rmse,
              base_rmse, secs)};
}

Result drag_classification(const Run& run) {
  if (!run.ok) return require_run(run);
  const double bin = load_json(run.dir / "drag-bin.metrics.json").at("test").at("accuracy_percent").get<double>();
  const double multi =
      load_json(run.dir / "drag-multi.metrics.json").at("test").at("accuracy_percent").get<double>();
  return {bin >= 85.0 && multi >= 55.0, fmt("binary %.2f%%, multiclass %.2f%%", bin, multi)};
}

Result sid_consistency(const Run& run) {
  if (!run.ok) return require_run(run);
  const InverseModel sid = InverseModel::from_document(nn::load_model((run.dir / "sid.json").string()));
  const Matrix targets = load_dataset((run.dir / "apt.csv").string()).apt_labels(Split::kTest, false);
  const InverseEvaluation ev = evaluate_inverse(sid, targets);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    const DesignRecord rec = infer_design(sid, {targets(i, 0), targets(i, 1), targets(i, 2)}, false);
    worst = std::max(worst, rec.seconds);
  }
  const double r2s = ev.surrogate.r2.value_or(-1.0);
  const double r2o = ev.oracle.r2.value_or(-1.0);
  return {r2s >= 0.99 && r2o >= 0.90 && worst < 0.1,
          fmt("%zu held-out targets: surrogate R2 %.4f, oracle R2 %.4f, slowest query %.2e s", ev.surrogate.n,
              r2s, r2o, worst)};
}

Result baseline_ordering(const Run& run) {
  if (!run.ok) return require_run(run);
  const auto j = load_json(run.dir / "benchmark.json");
  std::map<std::string, std::pair<double, double>> m;  // median seconds, mae
  std::size_t failed = 0;
  for (const auto& s : j.at("methods")) {
    const auto num = [](const nlohmann::ordered_json& v) { return v.is_null() ? NAN : v.get<double>(); };
    m[s.at("method").get<std::string>()] = {num(s.at("median_seconds")), num(s.at("mae"))};
    failed += s.at("n_failed").get<std::size_t>();
  }
  const auto [t_sid, mae_sid] = m.at("sid");
  const auto [t_bp, mae_bp] = m.at("backprop");
  const auto [t_sqp, mae_sqp] = m.at("sqp");
  const bool timing = t_sid < t_bp && t_bp < t_sqp && t_bp >= 10.0 * t_sid;
  const bool accuracy = mae_sid <= mae_bp && mae_bp <= mae_sqp;
  return {timing && accuracy && failed == 0,
          fmt("median s: sid %.2e, backprop %.2e, sqp %.2e (%s); surrogate MAE mm: sid %.2e, backprop %.2e, "
              "sqp %.2e (%s); failed records %zu",
              t_sid, t_bp, t_sqp, timing ? "ordered" : "not ordered", mae_sid, mae_bp, mae_sqp,
              accuracy ? "ordered" : "not ordered", failed)};
}

Result mid_constraint(const Run& run) {
  if (!run.ok) return require_run(run);
  const InverseModel sid = InverseModel::from_document(nn::load_model((run.dir / "sid.json").string()));
  const InverseModel mid = InverseModel::from_document(nn::load_model((run.dir / "mid.json").string()));
  const Matrix targets = load_dataset((run.dir / "apt.csv").string()).apt_labels(Split::kTest, false);
  const InverseEvaluation es = evaluate_inverse(sid, targets);
  const InverseEvaluation em = evaluate_inverse(mid, targets);
  const double ratio = em.surrogate.mae / es.surrogate.mae;

  const auto rows = csv::parse(slurp(run.dir / "sweep.csv"));
  std::size_t n_rows = rows.empty() ? 0 : rows.size() - 1;
  std::size_t n_front = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) n_front += rows[i].back() == "1" || rows[i].back() == "true";

  return {mid.weights.w1 == 0.4 && em.drag_free_rate >= 0.90 && ratio <= 1.5 && n_rows == 6 && n_front >= 1,
          fmt("w1 %.1f: drag-free %.1f%% (SID %.1f%%), APT MAE MID %.4f vs SID %.4f mm (ratio %.2f), "
              "invalid geometry %.1f%%; sweep rows %zu, nondominated %zu",
              mid.weights.w1, 100.0 * em.drag_free_rate, 100.0 * es.drag_free_rate, em.surrogate.mae,
              es.surrogate.mae, ratio, 100.0 * em.invalid_fraction, n_rows, n_front)};
}

// Drops wall-clock fields (and the notes derived from them) before comparing.
nlohmann::ordered_json without_timing(nlohmann::ordered_json j) {
  if (j.is_object()) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key().find("seconds") != std::string::npos) continue;
      out[it.key()] = without_timing(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& v : j) {
      if (v.is_string() && v.get<std::string>().find("seconds") != std::string::npos) continue;
      out.push_back(without_timing(v));
    }
    return out;
  }
  return j;
}

Result determinism(const Run& a, const Run& b) {
  if (!a.ok) return require_run(a);
  if (!b.ok) return require_run(b);
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(a.dir)) {
    if (!e.is_regular_file() || e.path().filename() == "pipeline.log") continue;
    files.push_back(fs::relative(e.path(), a.dir).string());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> differ;
  for (const auto& f : files) {
    if (!fs::exists(b.dir / f)) {
      differ.push_back(f + " (missing)");
      continue;
    }
    if (f == "benchmark.json") {
      if (without_timing(load_json(a.dir / f)) != without_timing(load_json(b.dir / f))) differ.push_back(f);
    } else if (f == "benchmark.csv" || f == "benchmark.svg") {
      continue;  // carry timings
    } else if (slurp(a.dir / f) != slurp(b.dir / f)) {
      differ.push_back(f);
    }
  }
  std::string list;
  for (const auto& f : differ) list += (list.empty() ? "" : ", ") + f;
  return {differ.empty() && files.size() >= 20,
          fmt("%zu files compared across two runs, %zu differ%s%s", files.size(), differ.size(),
              differ.empty() ? "" : ": ", list.c_str())};
}

Result geometry() {
  Rng rng(31337);
  std::size_t not_simple = 0;
  for (int i = 0; i < 10000; ++i) {
    const SealGeometry g = compute_points(testing::random_valid_design(rng));
    const auto groove = g.groove_polygon();
    const auto seal = g.seal_polygon();
    if (!testing::is_simple(groove) || !testing::is_simple(seal)) ++not_simple;
  }
  double worst_area = 0.0;
  for (int i = 0; i < 200; ++i) {
    worst_area = std::max(worst_area, testing::raster_rel_error(compute_points(testing::random_valid_design(rng)), 204));
  }
  double worst_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto u = testing::random_u(rng);
    const NormalizedDesign back = normalize_design(denormalize_design(u));
    for (std::size_t k = 0; k < kNumDesignVars; ++k) worst_trip = std::max(worst_trip, std::abs(back.u[k] - u[k]));
  }
  return {not_simple == 0 && worst_area < 0.03 && worst_trip <= 1e-12,
          fmt("non-simple polygons %zu/10000; worst raster area error %.2f%% over 200 designs at 204^2; "
              "worst round-trip error %.1e",
              not_simple, 100.0 * worst_area, worst_trip)};
}

std::string weight_bytes(nn::LayerStack s) {
  s.set_frozen(true);
  return s.to_json().dump();
}

Result freeze(const Run& run) {
  if (!run.ok) return require_run(run);
  const auto apt = ForwardModel::from_document(nn::load_model((run.dir / "apt-dnn.json").string()));
  const auto drag = ForwardModel::from_document(nn::load_model((run.dir / "drag-bin.json").string()));
  const auto sid = InverseModel::from_document(nn::load_model((run.dir / "sid.json").string()));
  const auto mid = InverseModel::from_document(nn::load_model((run.dir / "mid.json").string()));
  const bool sid_ok = weight_bytes(sid.apt_forward) == weight_bytes(apt.stack);
  const bool mid_apt_ok = weight_bytes(mid.apt_forward) == weight_bytes(apt.stack);
  const bool mid_drag_ok = mid.drag_forward && weight_bytes(*mid.drag_forward) == weight_bytes(drag.stack);

  // In-process: fingerprint around a short training of each inverse kind.
  const LabeledDataset data = load_dataset((run.dir / "apt.csv").string());
  nn::TrainConfig cfg = default_sid_config();
  cfg.max_epochs = 5;
  InverseModel s = build_sid(apt, 1);
  const std::string s_before = forward_fingerprint(s);
  train_sid(s, data, cfg);
  InverseModel m = build_mid(apt, drag, 1, {0.4, 0.6, 1e3, 1.0}, &sid);
  const std::string m_before = forward_fingerprint(m);
  cfg = default_mid_config();
  cfg.max_epochs = 5;
  train_mid(m, data, cfg);
  const bool live_ok = forward_fingerprint(s) == s_before && forward_fingerprint(m) == m_before;

  return {sid_ok && mid_apt_ok && mid_drag_ok && live_ok,
          fmt("trained files: SID apt %s, MID apt %s, MID drag %s; in-process SID/MID fingerprints %s",
              sid_ok ? "identical" : "CHANGED", mid_apt_ok ? "identical" : "CHANGED",
              mid_drag_ok ? "identical" : "CHANGED", live_ok ? "identical" : "CHANGED")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance checks");
  std::string work = "acceptance-work";
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for pipeline runs");
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };
  const auto t0 = Clock::now();

  const bool need_run = wanted(3) || wanted(4) || wanted(5) || wanted(6) || wanted(7) || wanted(8) || wanted(10);
  Run first, second;
  if (need_run) {
    std::cout << "running pipeline (seed 42, default configuration) ..." << std::endl;
    first = run_pipeline(fs::path(work) / "run1");
    std::string stages;
    for (const auto& [k, v] : first.seconds) stages += fmt(" %s %.1fs", k.c_str(), v);
    std::cout << "stages:" << stages << std::endl;
  }

  int failures = 0;
  auto report = [&](int n, const char* title, const std::function<Result()>& fn) {
    if (!wanted(n)) return;
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " - " << r.detail
              << std::endl;
  };

  report(1, "gradient correctness", gradients);
  report(2, "oracle invariants", oracle_invariants);
  report(3, "forward surrogate quality", [&] { return forward_quality(first); });
  report(4, "drag classification", [&] { return drag_classification(first); });
  report(5, "SID consistency", [&] { return sid_consistency(first); });
  report(6, "baseline ordering", [&] { return baseline_ordering(first); });
  report(7, "MID constraint handling", [&] { return mid_constraint(first); });
  report(8, "determinism", [&] {
    std::cout << "rerunning pipeline ..." << std::endl;
    second = run_pipeline(fs::path(work) / "run2");
    return determinism(first, second);
  });
  report(9, "geometry and raster", geometry);
  report(10, "freeze integrity", [&] { return freeze(first); });

  std::cout << fmt("%d criteria failed, %.0f s total", failures, since(t0)) << std::endl;
  return failures == 0 ? 0 : 1;
}
