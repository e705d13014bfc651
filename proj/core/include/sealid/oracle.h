#ifndef SEALID_ORACLE_H_
#define SEALID_ORACLE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sealid/geometry.h"

namespace sealid {

// Closed-form stand-in for the finite-element runs: maps a normalized design
// to apparent piston travel at three pressures and to a drag label.
namespace oracle {

inline constexpr std::string_view kVersion = "analytic-oracle-v1";
inline constexpr std::array<double, 3> kPressureFractions{0.04, 0.40, 1.00};
inline constexpr double kMaxPressureBar = 100.0;
inline constexpr double kSaturationPressureBar = 6.0;
inline constexpr double kDragThreshold = -0.35;
inline constexpr double kDragComplianceGain = 120.0;
inline constexpr double kOnsetSpan = 1.2;
inline constexpr std::array<int, 7> kOnsetClasses{30, 40, 50, 60, 70, 80, 90};

using Apt = std::array<double, 3>;

struct DragLabel {
  bool amplified = false;
  std::optional<int> onset_bar;  // present iff amplified
};

struct Eval {
  double rollback = 0.0;     // r(u), mm
  double compliance = 0.0;   // c(u), mm/bar
  Apt apt{};
  double drag_score = 0.0;   // s(u)
  DragLabel drag;
};

// All of these throw Error(kOutOfRange) when any u_i lies outside [0,1].
double rollback(const NormalizedDesign& u);
double compliance(const NormalizedDesign& u);
Apt eval_apt(const NormalizedDesign& u);
double drag_score(const NormalizedDesign& u);
DragLabel eval_drag(const NormalizedDesign& u);
Eval evaluate(const NormalizedDesign& u);

}  // namespace oracle

struct DoePlan {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

// Latin hypercube sample with strata bookkeeping. strata[i][j] is the stratum
// of sample j along dimension i.
struct LhsSample {
  std::vector<NormalizedDesign> points;
  std::vector<std::vector<std::size_t>> strata;
};

// RNG draw order: 13 permutations (dimension order), then one jitter per
// (sample, dimension) in row-major order.
LhsSample lhs_sample(const DoePlan& plan);

enum class Task { kApt, kDrag };

std::string_view task_name(Task task);

struct LabeledSample {
  DesignVector x{};
  oracle::Apt apt{};  // kApt only
  oracle::DragLabel drag;  // kDrag only
};

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t n_requested = 0;
  std::size_t n_kept = 0;
  std::size_t n_dropped = 0;
  std::string_view oracle_version = oracle::kVersion;
};

struct RawDataset {
  Task task = Task::kApt;
  std::vector<LabeledSample> rows;
  Provenance provenance;
};

// LHS plan -> physical designs -> validity filter -> oracle labels.
// Throws Error(kEmptyDataset) if no sample survives cleaning.
RawDataset generate_labeled(const DoePlan& plan, Task task);

}  // namespace sealid

#endif  // SEALID_ORACLE_H_
