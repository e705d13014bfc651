#ifndef SEALID_BASELINE_H_
#define SEALID_BASELINE_H_

#include <optional>
#include <string>
#include <vector>

#include "sealid/inverse.h"

namespace sealid {

enum class Method { kSid, kMid, kBackprop, kSqp };

std::string_view method_name(Method m);
Method parse_method(std::string_view s);
// Comma-separated list, e.g. "sid,backprop,sqp".
std::vector<Method> parse_methods(std::string_view list);

struct OptimizeConfig {
  // Input-space Adam.
  double backprop_lr = 0.01;
  std::size_t backprop_max_iters = 2000;
  std::size_t backprop_window = 20;
  double backprop_tol = 1e-10;
  // Projected BFGS.
  double fd_step = 1e-5;
  double armijo_c = 1e-4;
  std::size_t sqp_max_iters = 500;
  std::size_t max_halvings = 40;
  double sqp_ftol = 1e-12;
  double sqp_gtol = 1e-8;
  // Both.
  double initial_u = 0.5;
  std::size_t starts = 1;  // extra random starts when > 1
  std::uint64_t seed = 42;
};

enum class RecordStatus { kOk, kLineSearchFailed, kFailed };

std::string_view record_status_name(RecordStatus s);

struct BenchmarkRecord {
  Method method = Method::kSid;
  RowVector target;             // normalized
  std::array<double, kNumDesignVars> u{};
  RowVector surrogate;          // normalized forward(u)
  double surrogate_mse = 0.0;   // normalized space
  oracle::Apt target_mm{};
  oracle::Apt surrogate_mm{};
  oracle::Apt oracle_mm{};
  std::size_t iterations = 0;
  double seconds = 0.0;
  RecordStatus status = RecordStatus::kOk;
  std::string message;
};

// Adam on u from all-`initial_u`, clamped to [0,1] after each step. Stops
// after max iterations or when the loss moved less than tol over the last
// `window` iterations. Throws kDiverged on a non-finite loss.
BenchmarkRecord backprop_optimize(const nn::LayerStack& forward, const RowVector& target,
                                  const OptimizeConfig& cfg = {});

// Projected BFGS with central-difference gradients and Armijo backtracking.
// A failed line search ends the run with the best iterate and a
// kLineSearchFailed status.
BenchmarkRecord sqp_optimize(const nn::LayerStack& forward, const RowVector& target,
                             const OptimizeConfig& cfg = {});

struct MethodSummary {
  Method method = Method::kSid;
  std::size_t n_targets = 0;
  std::size_t n_failed = 0;
  double mae = 0.0;          // surrogate space, mm
  double rmse = 0.0;
  double r2 = 0.0;
  double mae_oracle = 0.0;   // oracle space, mm
  double rmse_oracle = 0.0;
  double r2_oracle = 0.0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  std::string target_checksum;
  std::vector<BenchmarkRecord> records;
};

struct BenchmarkReport {
  std::string target_checksum;
  std::vector<MethodSummary> methods;
  std::vector<std::string> notes;  // ordering checks

  const MethodSummary* find(Method m) const;
  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
  std::string to_svg() const;
};

struct BenchmarkModels {
  const ForwardModel* apt = nullptr;
  const InverseModel* sid = nullptr;
  const InverseModel* mid = nullptr;
};

// Canonical text of a target table (one "a,b,c" row per target, mm) and its
// FNV-1a checksum, shared by every method.
std::string targets_text(const Matrix& targets_mm);
Matrix parse_targets(std::string_view text, int arity = 3);

// Runs every method on the same physical APT targets (mm). A method whose
// model is missing or which throws is recorded as failed, not fatal.
BenchmarkReport run_benchmark(const BenchmarkModels& models, const Matrix& targets_mm,
                              const std::vector<Method>& methods, const OptimizeConfig& cfg = {});

}  // namespace sealid

#endif  // SEALID_BASELINE_H_
