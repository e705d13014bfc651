#include "sealid/baseline.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

#include "sealid/csv.h"
#include "sealid/error.h"
#include "sealid/neural/adam.h"

namespace sealid {

namespace {

using Clock = std::chrono::steady_clock;
constexpr Eigen::Index kDims = static_cast<Eigen::Index>(kNumDesignVars);

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double objective(const nn::LayerStack& net, const RowVector& u, const RowVector& target) {
  return (net.forward(u) - target).squaredNorm() / static_cast<double>(target.size());
}

void clamp_unit(RowVector& u) { u = u.cwiseMax(0.0).cwiseMin(1.0); }

void check_target(const nn::LayerStack& net, const RowVector& target) {
  if (net.input_size() != kDims || net.output_size() != target.size()) {
    throw Error(ErrorCode::kShapeMismatch, "target does not match the forward model outputs");
  }
}

std::vector<RowVector> start_points(const OptimizeConfig& cfg) {
  std::vector<RowVector> starts{RowVector::Constant(kDims, cfg.initial_u)};
  Rng rng(derive_seed(cfg.seed, "multistart"));
  for (std::size_t s = 1; s < cfg.starts; ++s) {
    RowVector u(kDims);
    for (Eigen::Index i = 0; i < kDims; ++i) u(i) = rng.uniform();
    starts.push_back(u);
  }
  return starts;
}

void finish(BenchmarkRecord& rec, const nn::LayerStack& net, const RowVector& u,
            const RowVector& target) {
  for (Eigen::Index i = 0; i < kDims; ++i) rec.u[static_cast<std::size_t>(i)] = u(i);
  rec.target = target;
  rec.surrogate = net.forward(u);
  rec.surrogate_mse = (rec.surrogate - target).squaredNorm() / static_cast<double>(target.size());
}

BenchmarkRecord backprop_single(nn::LayerStack& net, const RowVector& target, RowVector u,
                                const OptimizeConfig& cfg) {
  BenchmarkRecord rec;
  rec.method = Method::kBackprop;
  Matrix m = Matrix::Zero(1, kDims);
  Matrix v = Matrix::Zero(1, kDims);
  std::deque<double> recent;
  std::size_t it = 0;
  while (it < cfg.backprop_max_iters) {
    const Matrix pred = net.forward_train(u);
    const nn::LossResult r = nn::mse(pred, target);
    if (!std::isfinite(r.value)) {
      throw Error(ErrorCode::kDiverged, "input-space loss became non-finite");
    }
    recent.push_back(r.value);
    if (recent.size() > cfg.backprop_window) {
      if (std::abs(recent.front() - r.value) < cfg.backprop_tol) break;
      recent.pop_front();
    }
    const Matrix g = net.backward(r.grad);
    Matrix um = u;
    nn::adam_update(um, g, m, v, static_cast<long>(++it), cfg.backprop_lr);
    u = um;
    clamp_unit(u);
  }
  net.clear_cache();
  rec.iterations = it;
  finish(rec, net, u, target);
  return rec;
}

RowVector central_gradient(const nn::LayerStack& net, const RowVector& u, const RowVector& target,
                           double h) {
  RowVector g(kDims);
  RowVector probe = u;
  for (Eigen::Index i = 0; i < kDims; ++i) {
    probe(i) = u(i) + h;
    const double fp = objective(net, probe, target);
    probe(i) = u(i) - h;
    const double fm = objective(net, probe, target);
    probe(i) = u(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Variables held at a bound by a gradient pointing outward.
std::vector<bool> active_set(const RowVector& u, const RowVector& g) {
  std::vector<bool> active(static_cast<std::size_t>(kDims));
  for (Eigen::Index i = 0; i < kDims; ++i) {
    active[static_cast<std::size_t>(i)] = (u(i) <= 0.0 && g(i) > 0.0) || (u(i) >= 1.0 && g(i) < 0.0);
  }
  return active;
}

BenchmarkRecord sqp_single(const nn::LayerStack& net, const RowVector& target, RowVector u,
                           const OptimizeConfig& cfg) {
  BenchmarkRecord rec;
  rec.method = Method::kSqp;
  Matrix hinv = Matrix::Identity(kDims, kDims);
  double f = objective(net, u, target);
  RowVector g = central_gradient(net, u, target, cfg.fd_step);
  std::size_t it = 0;
  while (it < cfg.sqp_max_iters) {
    const auto active = active_set(u, g);
    RowVector pg = g;
    for (Eigen::Index i = 0; i < kDims; ++i) {
      if (active[static_cast<std::size_t>(i)]) pg(i) = 0.0;
    }
    if (pg.cwiseAbs().maxCoeff() < cfg.sqp_gtol) break;

    Matrix h = hinv;
    for (Eigen::Index i = 0; i < kDims; ++i) {
      if (active[static_cast<std::size_t>(i)]) {
        h.row(i).setZero();
        h.col(i).setZero();
      }
    }
    RowVector d = -(h * pg.transpose()).transpose();
    if (pg.dot(d) >= 0.0) {
      hinv.setIdentity();
      d = -pg;
    }

    ++it;
    double alpha = 1.0;
    bool accepted = false;
    RowVector u_new;
    double f_new = f;
    for (std::size_t k = 0; k <= cfg.max_halvings; ++k, alpha *= 0.5) {
      u_new = u + alpha * d;
      clamp_unit(u_new);
      f_new = objective(net, u_new, target);
      if (f_new <= f + cfg.armijo_c * g.dot(u_new - u)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rec.status = RecordStatus::kLineSearchFailed;
      rec.message = "Armijo backtracking exhausted at iteration " + std::to_string(it);
      break;
    }
    const RowVector g_new = central_gradient(net, u_new, target, cfg.fd_step);
    const RowVector s = u_new - u;
    const RowVector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(kDims, kDims);
      const Matrix left = eye - rho * s.transpose() * y;
      hinv = left * hinv * left.transpose() + rho * s.transpose() * s;
    }
    const double df = f - f_new;
    u = u_new;
    f = f_new;
    g = g_new;
    if (std::abs(df) < cfg.sqp_ftol) break;
  }
  rec.iterations = it;
  finish(rec, net, u, target);
  return rec;
}

template <typename Single>
BenchmarkRecord best_of_starts(const OptimizeConfig& cfg, Single single) {
  std::optional<BenchmarkRecord> best;
  std::size_t iterations = 0;
  for (const RowVector& start : start_points(cfg)) {
    BenchmarkRecord rec = single(start);
    iterations += rec.iterations;
    if (!best || rec.surrogate_mse < best->surrogate_mse) best = std::move(rec);
  }
  best->iterations = iterations;
  return *best;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSid: return "sid";
    case Method::kMid: return "mid";
    case Method::kBackprop: return "backprop";
    case Method::kSqp: return "sqp";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (Method m : {Method::kSid, Method::kMid, Method::kBackprop, Method::kSqp}) {
    if (method_name(m) == s) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + std::string(s) + "'");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const std::string_view item = list.substr(start, comma - start);
    if (item.empty()) throw Error(ErrorCode::kInvalidArgument, "empty method name");
    out.push_back(parse_method(item));
    start = comma + 1;
  }
  return out;
}

std::string_view record_status_name(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kLineSearchFailed: return "line_search_failed";
    case RecordStatus::kFailed: return "failed";
  }
  return "?";
}

BenchmarkRecord backprop_optimize(const nn::LayerStack& forward, const RowVector& target,
                                  const OptimizeConfig& cfg) {
  check_target(forward, target);
  nn::LayerStack net = forward;
  net.set_frozen(true);
  return best_of_starts(cfg, [&](const RowVector& u0) { return backprop_single(net, target, u0, cfg); });
}

BenchmarkRecord sqp_optimize(const nn::LayerStack& forward, const RowVector& target,
                             const OptimizeConfig& cfg) {
  check_target(forward, target);
  return best_of_starts(cfg, [&](const RowVector& u0) { return sqp_single(forward, target, u0, cfg); });
}

// ---------------------------------------------------------------- harness

std::string targets_text(const Matrix& targets_mm) {
  std::string out;
  for (Eigen::Index r = 0; r < targets_mm.rows(); ++r) {
    std::vector<std::string> fields;
    for (Eigen::Index c = 0; c < targets_mm.cols(); ++c) {
      fields.push_back(csv::format_double(targets_mm(r, c)));
    }
    out += csv::join_row(fields);
  }
  return out;
}

Matrix parse_targets(std::string_view text, int arity) {
  const auto rows = csv::parse(text);
  Matrix out(static_cast<Eigen::Index>(rows.size()), arity);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(arity)) {
      throw Error(ErrorCode::kInvalidArgument, "target row " + std::to_string(r + 1) + " has " +
                                                   std::to_string(rows[r].size()) + " values, expected " +
                                                   std::to_string(arity));
    }
    for (int c = 0; c < arity; ++c) {
      const std::string& f = rows[r][static_cast<std::size_t>(c)];
      double v = 0.0;
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::kInvalidArgument, "target row " + std::to_string(r + 1) +
                                                     " has a non-numeric value '" + f + "'");
      }
      out(static_cast<Eigen::Index>(r), c) = v;
    }
  }
  return out;
}

const MethodSummary* BenchmarkReport::find(Method m) const {
  for (const auto& s : methods) {
    if (s.method == m) return &s;
  }
  return nullptr;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double r2_or_nan(const Matrix& pred, const Matrix& truth) {
  try {
    return metric_r2(pred, truth);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateTruth) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

BenchmarkRecord run_one(Method method, const BenchmarkModels& models, const RowVector& t,
                        const OptimizeConfig& cfg) {
  const InverseModel* inv = method == Method::kSid ? models.sid : (method == Method::kMid ? models.mid : nullptr);
  if ((method == Method::kSid || method == Method::kMid) && inv == nullptr) {
    throw Error(ErrorCode::kMethodFailed, std::string(method_name(method)) + " model not supplied");
  }
  if (inv != nullptr) {
    BenchmarkRecord rec;
    rec.method = method;
    const auto t0 = Clock::now();
    const Matrix u = inv->generate(t);
    rec.seconds = seconds_since(t0);
    finish(rec, models.apt->stack, u, t);
    return rec;
  }
  const auto t0 = Clock::now();
  BenchmarkRecord rec = method == Method::kBackprop ? backprop_optimize(models.apt->stack, t, cfg)
                                                    : sqp_optimize(models.apt->stack, t, cfg);
  rec.seconds = seconds_since(t0);
  return rec;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkModels& models, const Matrix& targets_mm,
                              const std::vector<Method>& methods, const OptimizeConfig& cfg) {
  if (models.apt == nullptr || !models.apt->y_norm) {
    throw Error(ErrorCode::kIncompatibleForward, "benchmark needs the APT regressor");
  }
  if (targets_mm.rows() == 0 || targets_mm.cols() != 3) {
    throw Error(ErrorCode::kEmptyDataset, "benchmark needs at least one 3-value target");
  }
  const NormSpec& y_norm = *models.apt->y_norm;
  BenchmarkReport report;
  const std::string text = targets_text(targets_mm);
  report.target_checksum = hex64(fnv1a64(text));

  for (Method method : methods) {
    MethodSummary sum;
    sum.method = method;
    const std::string consumed = text;  // each method reads the same bytes
    sum.target_checksum = hex64(fnv1a64(consumed));
    const Matrix targets = parse_targets(consumed);
    const Matrix t_norm = y_norm.normalize(targets);
    sum.n_targets = static_cast<std::size_t>(targets.rows());

    std::vector<Eigen::Index> ok_rows;
    std::vector<double> seconds;
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      BenchmarkRecord rec;
      try {
        rec = run_one(method, models, t_norm.row(i), cfg);
        NormalizedDesign d;
        d.u = rec.u;
        rec.oracle_mm = oracle::eval_apt(d);
        for (std::size_t k = 0; k < 3; ++k) {
          rec.surrogate_mm[k] = y_norm.denormalize(k, rec.surrogate(static_cast<Eigen::Index>(k)));
        }
        ok_rows.push_back(i);
        seconds.push_back(rec.seconds);
      } catch (const Error& e) {
        rec = BenchmarkRecord{};
        rec.method = method;
        rec.target = t_norm.row(i);
        rec.status = RecordStatus::kFailed;
        rec.message = e.what();
        ++sum.n_failed;
      }
      for (std::size_t k = 0; k < 3; ++k) rec.target_mm[k] = targets(i, static_cast<Eigen::Index>(k));
      sum.records.push_back(std::move(rec));
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    sum.mae = sum.rmse = sum.r2 = sum.mae_oracle = sum.rmse_oracle = sum.r2_oracle = nan;
    sum.mean_seconds = sum.median_seconds = nan;
    if (!ok_rows.empty()) {
      const auto n = static_cast<Eigen::Index>(ok_rows.size());
      Matrix truth(n, 3), sur(n, 3), orc(n, 3);
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto& rec = sum.records[static_cast<std::size_t>(ok_rows[static_cast<std::size_t>(r)])];
        for (int k = 0; k < 3; ++k) {
          truth(r, k) = rec.target_mm[static_cast<std::size_t>(k)];
          sur(r, k) = rec.surrogate_mm[static_cast<std::size_t>(k)];
          orc(r, k) = rec.oracle_mm[static_cast<std::size_t>(k)];
        }
      }
      sum.mae = metric_mae(sur, truth);
      sum.rmse = metric_rmse(sur, truth);
      sum.r2 = r2_or_nan(sur, truth);
      sum.mae_oracle = metric_mae(orc, truth);
      sum.rmse_oracle = metric_rmse(orc, truth);
      sum.r2_oracle = r2_or_nan(orc, truth);
      double total = 0.0;
      for (double s : seconds) total += s;
      sum.mean_seconds = total / static_cast<double>(seconds.size());
      sum.median_seconds = median(seconds);
    }
    report.methods.push_back(std::move(sum));
  }

  auto note = [&report](Method a, Method b, const char* what, auto value) {
    const MethodSummary* sa = report.find(a);
    const MethodSummary* sb = report.find(b);
    if (sa == nullptr || sb == nullptr) return;
    const bool holds = value(*sa) <= value(*sb);
    report.notes.push_back(std::string(what) + " " + std::string(method_name(a)) + " <= " +
                           std::string(method_name(b)) + ": " + (holds ? "holds" : "violated"));
  };
  auto secs = [](const MethodSummary& s) { return s.median_seconds; };
  auto mae = [](const MethodSummary& s) { return s.mae; };
  note(Method::kSid, Method::kBackprop, "median_seconds", secs);
  note(Method::kBackprop, Method::kSqp, "median_seconds", secs);
  note(Method::kSid, Method::kBackprop, "mae", mae);
  note(Method::kBackprop, Method::kSqp, "mae", mae);
  return report;
}

// ---------------------------------------------------------------- emitters

namespace {

nlohmann::ordered_json num(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json BenchmarkReport::to_json() const {
  nlohmann::ordered_json j;
  j["target_checksum"] = target_checksum;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& s : methods) {
    nlohmann::ordered_json m;
    m["method"] = method_name(s.method);
    m["n_targets"] = s.n_targets;
    m["n_failed"] = s.n_failed;
    m["mae"] = num(s.mae);
    m["rmse"] = num(s.rmse);
    m["r2"] = num(s.r2);
    m["mae_oracle"] = num(s.mae_oracle);
    m["rmse_oracle"] = num(s.rmse_oracle);
    m["r2_oracle"] = num(s.r2_oracle);
    m["mean_seconds"] = num(s.mean_seconds);
    m["median_seconds"] = num(s.median_seconds);
    m["target_checksum"] = s.target_checksum;
    m["records"] = nlohmann::ordered_json::array();
    for (const auto& r : s.records) {
      m["records"].push_back({{"target", r.target_mm},
                              {"u", r.u},
                              {"surrogate", r.surrogate_mm},
                              {"oracle", r.oracle_mm},
                              {"iterations", r.iterations},
                              {"seconds", r.seconds},
                              {"status", record_status_name(r.status)},
                              {"message", r.message}});
    }
    j["methods"].push_back(std::move(m));
  }
  j["notes"] = notes;
  return j;
}

std::string BenchmarkReport::to_csv() const {
  std::string out =
      "method,index,target1,target2,target3,surrogate1,surrogate2,surrogate3,oracle1,oracle2,"
      "oracle3,iterations,seconds,status\n";
  for (const auto& s : methods) {
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const auto& r = s.records[i];
      std::vector<std::string> f{std::string(method_name(s.method)), std::to_string(i)};
      for (double v : r.target_mm) f.push_back(csv::format_double(v));
      for (double v : r.surrogate_mm) f.push_back(csv::format_double(v));
      for (double v : r.oracle_mm) f.push_back(csv::format_double(v));
      f.push_back(std::to_string(r.iterations));
      f.push_back(csv::format_double(r.seconds));
      f.push_back(std::string(record_status_name(r.status)));
      out += csv::join_row(f);
    }
  }
  return out;
}

std::string BenchmarkReport::to_svg() const {
  // Three panels: surrogate MAE, oracle MAE, median seconds (log10 axis).
  const int panel_w = 220, panel_h = 200, margin = 40;
  const int width = 3 * panel_w + 2 * margin;
  const int height = panel_h + 2 * margin + 30;
  static const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52"};
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  struct Panel {
    const char* title;
    double (*value)(const MethodSummary&);
    bool log;
  };
  const Panel panels[] = {
      {"surrogate MAE (mm)", [](const MethodSummary& s) { return s.mae; }, false},
      {"oracle MAE (mm)", [](const MethodSummary& s) { return s.mae_oracle; }, false},
      {"median seconds (log10)", [](const MethodSummary& s) { return s.median_seconds; }, true},
  };
  for (int p = 0; p < 3; ++p) {
    const Panel& panel = panels[p];
    const int x0 = margin + p * panel_w;
    const int base = margin + panel_h;
    std::vector<double> vals;
    for (const auto& s : methods) {
      double v = panel.value(s);
      if (panel.log) v = std::isfinite(v) && v > 0.0 ? std::log10(v) : 0.0;
      vals.push_back(std::isfinite(v) ? v : 0.0);
    }
    double lo = 0.0, hi = 0.0;
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo <= 0.0) hi = lo + 1.0;
    const double zero_y = base - (0.0 - lo) / (hi - lo) * panel_h;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\">%s</text>\n",
                  x0 + 10, margin - 12, panel.title);
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%.3f\" x2=\"%d\" y2=\"%.3f\" stroke=\"black\"/>\n", x0 + 5,
                  zero_y, x0 + panel_w - 15, zero_y);
    svg += buf;
    const double bar_w = (panel_w - 30.0) / std::max<std::size_t>(1, methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const double y_val = base - (vals[i] - lo) / (hi - lo) * panel_h;
      const double top = std::min(y_val, zero_y);
      const double h = std::abs(zero_y - y_val);
      const double bx = x0 + 10 + static_cast<double>(i) * bar_w;
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"%s\"/>\n",
                    bx + 2.0, top, bar_w - 4.0, h, kColors[i % 4]);
      svg += buf;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.3f\" y=\"%d\" font-family=\"sans-serif\" font-size=\"10\" "
                    "text-anchor=\"middle\">%s</text>\n",
                    bx + bar_w / 2.0, base + 16, std::string(method_name(methods[i].method)).c_str());
      svg += buf;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.3f\" y=\"%.3f\" font-family=\"sans-serif\" font-size=\"9\" "
                    "text-anchor=\"middle\">%.4g</text>\n",
                    bx + bar_w / 2.0, top - 3.0, panel.value(methods[i]));
      svg += buf;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sealid
