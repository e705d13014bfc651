#include "sealid/oracle.h"

#include <algorithm>
#include <cmath>

#include "sealid/error.h"
#include "sealid/rng.h"

namespace sealid {
namespace oracle {

namespace {

void check_range(const NormalizedDesign& d) {
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    if (!(d.u[i] >= 0.0 && d.u[i] <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange,
                  "u" + std::to_string(i + 1) + " = " + std::to_string(d.u[i]) +
                      " outside [0,1]");
    }
  }
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double rollback_unchecked(const std::array<double, kNumDesignVars>& u) {
  const double grip = u[0] + u[3] + 0.5 * u[1] - u[5] - u[6] - 0.25;
  return 0.8 + 1.2 * logistic(3.0 * grip) + 0.4 * u[7] * u[8];
}

double compliance_unchecked(const std::array<double, kNumDesignVars>& u) {
  return 0.004 + 0.010 * (1.0 - u[9]) + 0.008 * (1.0 - u[10]) +
         0.004 * (1.0 - u[11]) + 0.003 * u[12];
}

Apt apt_from(double r, double c) {
  Apt apt;
  for (std::size_t k = 0; k < 3; ++k) {
    const double p = kPressureFractions[k] * kMaxPressureBar;
    apt[k] = r * (1.0 - std::exp(-p / kSaturationPressureBar)) + c * p;
  }
  return apt;
}

double score_from(double r, double c, const std::array<double, kNumDesignVars>& u) {
  return r - kDragComplianceGain * c + 0.6 * u[2] - 0.5 * u[4];
}

DragLabel drag_from(double s) {
  DragLabel label;
  // s == threshold counts as not amplified.
  label.amplified = s > kDragThreshold;
  if (label.amplified) {
    const double frac = std::clamp(1.0 - (s - kDragThreshold) / kOnsetSpan, 0.0, 1.0);
    const int level = std::min(6, static_cast<int>(std::floor(7.0 * frac)));
    label.onset_bar = 30 + 10 * level;
  }
  return label;
}

}  // namespace

double rollback(const NormalizedDesign& u) {
  check_range(u);
  return rollback_unchecked(u.u);
}

double compliance(const NormalizedDesign& u) {
  check_range(u);
  return compliance_unchecked(u.u);
}

Apt eval_apt(const NormalizedDesign& u) {
  check_range(u);
  return apt_from(rollback_unchecked(u.u), compliance_unchecked(u.u));
}

double drag_score(const NormalizedDesign& u) {
  check_range(u);
  return score_from(rollback_unchecked(u.u), compliance_unchecked(u.u), u.u);
}

DragLabel eval_drag(const NormalizedDesign& u) { return drag_from(drag_score(u)); }

Eval evaluate(const NormalizedDesign& u) {
  check_range(u);
  Eval e;
  e.rollback = rollback_unchecked(u.u);
  e.compliance = compliance_unchecked(u.u);
  e.apt = apt_from(e.rollback, e.compliance);
  e.drag_score = score_from(e.rollback, e.compliance, u.u);
  e.drag = drag_from(e.drag_score);
  return e;
}

}  // namespace oracle

LhsSample lhs_sample(const DoePlan& plan) {
  if (plan.n_samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "LHS needs n_samples >= 1");
  }
  const std::size_t n = plan.n_samples;
  Rng rng(plan.seed);
  LhsSample out;
  out.strata.reserve(kNumDesignVars);
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    out.strata.push_back(rng.permutation(n));
  }
  out.points.resize(n);
  const double width = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < kNumDesignVars; ++i) {
      const double v = (static_cast<double>(out.strata[i][j]) + rng.uniform()) * width;
      out.points[j].u[i] = std::min(v, 1.0);
    }
  }
  return out;
}

std::string_view task_name(Task task) {
  return task == Task::kApt ? "apt" : "drag";
}

RawDataset generate_labeled(const DoePlan& plan, Task task) {
  const LhsSample doe = lhs_sample(plan);
  RawDataset out;
  out.task = task;
  out.provenance.seed = plan.seed;
  out.provenance.n_requested = plan.n_samples;
  for (const auto& u : doe.points) {
    LabeledSample row;
    row.x = denormalize_design(u);
    // Invalid geometry plays the role of a simulation that failed to converge.
    if (!is_valid(row.x)) continue;
    if (task == Task::kApt) {
      row.apt = oracle::eval_apt(u);
    } else {
      row.drag = oracle::eval_drag(u);
    }
    out.rows.push_back(row);
  }
  out.provenance.n_kept = out.rows.size();
  out.provenance.n_dropped = plan.n_samples - out.rows.size();
  if (out.rows.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "every sampled design failed validation");
  }
  return out;
}

}  // namespace sealid
