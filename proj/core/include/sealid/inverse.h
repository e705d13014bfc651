#ifndef SEALID_INVERSE_H_
#define SEALID_INVERSE_H_

#include <optional>
#include <string>
#include <vector>

#include "sealid/predict.h"

namespace sealid {

enum class InverseKind { kSid, kMid };

std::string_view inverse_kind_name(InverseKind k);

// Hidden widths shared by the SID and MID inverse stacks.
inline const std::vector<int> kInverseHidden{256, 256, 128, 64};

struct LossWeights {
  double w1 = 1.0;
  double w2 = 0.0;
  double kappa_apt = 1e3;
  double kappa_drag = 1.0;
};

// Loss_APT is the mse on normalized APT, Loss_Drag the bce of the drag
// probability against the constant 0 target.
struct LossPair {
  double loss_apt = 0.0;
  double loss_drag = 0.0;
};

// Tandem model: targets -> inverse stack -> u in (0,1)^13 -> frozen forward
// stacks. MID inputs carry a fourth column, the drag target, always 0.
struct InverseModel {
  InverseKind kind = InverseKind::kSid;
  nn::LayerStack inverse;
  nn::LayerStack apt_forward;
  std::optional<nn::LayerStack> drag_forward;
  NormSpec x_norm;
  NormSpec y_norm;
  LossWeights weights;
  nn::TrainConfig config;
  nn::TrainHistory history;
  std::optional<LossPair> final_losses;  // test targets, after training

  int target_size() const { return kind == InverseKind::kSid ? 3 : 4; }

  // Normalized APT targets (n x 3) -> inverse inputs (n x target_size()).
  Matrix inputs_for(const Matrix& apt_targets) const;
  // Normalized APT targets -> generated u (n x 13).
  Matrix generate(const Matrix& apt_targets) const;
  // Normalized APT targets -> surrogate APT of the generated designs.
  Matrix composite(const Matrix& apt_targets) const;
  // Drag probability of the generated designs (MID only).
  Matrix drag_probability(const Matrix& apt_targets) const;

  nn::ModelDocument to_document() const;
  static InverseModel from_document(const nn::ModelDocument& doc);
};

// Serialized bytes of the frozen forward stacks, for freeze checks.
std::string forward_fingerprint(const InverseModel& m);

// Throws kIncompatibleForward unless `apt` is a 13 -> 3 APT regressor with a
// label norm_spec.
InverseModel build_sid(const ForwardModel& apt, std::uint64_t seed);

// Throws kIncompatibleForward for a wrong drag model kind and
// kNormSpecMismatch when the two forwards use different x norm_specs. With
// `warm_start` the inverse starts from the SID weights, the extra drag-target
// input row initialized to zero.
InverseModel build_mid(const ForwardModel& apt, const ForwardModel& drag, std::uint64_t seed,
                       const LossWeights& weights = {0.4, 0.6, 1e3, 1.0},
                       const InverseModel* warm_start = nullptr);

nn::TrainConfig default_sid_config();
nn::TrainConfig default_mid_config();

// w1*kA*mse(apt_pred, apt_target) + w2*kD*bce(drag_prob, 0).
double mid_loss(const Matrix& apt_pred, const Matrix& apt_target, const Matrix& drag_prob,
                const LossWeights& w);
double mid_loss(const LossPair& parts, const LossWeights& w);

// Targets are the normalized APT labels of the training partition, with the
// validation partition driving early stopping. Forward weights never change.
void train_sid(InverseModel& m, const LabeledDataset& apt, const nn::TrainConfig& cfg);
void train_mid(InverseModel& m, const LabeledDataset& apt, const nn::TrainConfig& cfg);

LossPair loss_pair(const InverseModel& m, const Matrix& apt_targets);

struct DesignRecord {
  oracle::Apt targets{};                 // mm
  std::array<double, kNumDesignVars> u{};
  DesignVector x{};
  std::vector<Violation> violations;
  oracle::Apt surrogate_apt{};           // mm
  std::optional<double> drag_probability;
  std::optional<oracle::Eval> oracle;    // when verified
  double seconds = 0.0;
  std::optional<std::string> warning;    // OutOfRangeTarget

  nlohmann::ordered_json to_json() const;
};

// Targets outside the training label range widened by 10% on each side get a
// warning but are still evaluated.
DesignRecord infer_design(const InverseModel& m, const oracle::Apt& targets, bool verify);
std::optional<std::string> target_range_warning(const NormSpec& y_norm, const oracle::Apt& t);

// Aggregate quality of an inverse model on a set of physical APT targets.
struct InverseEvaluation {
  MetricReport surrogate;   // target vs surrogate APT, mm
  MetricReport oracle;      // target vs oracle APT of the generated design, mm
  LossPair losses;
  double drag_free_rate = 0.0;   // oracle-checked
  double invalid_fraction = 0.0; // geometry validity failures
  double mean_seconds = 0.0;     // per query
};

InverseEvaluation evaluate_inverse(const InverseModel& m, const Matrix& apt_targets_mm);

struct SweepRow {
  double w1 = 0.0;
  double w2 = 0.0;
  double loss_apt = 0.0;
  double loss_drag = 0.0;
  double drag_free_rate = 0.0;
  bool nondominated = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::string to_csv() const;
};

inline const std::vector<double> kDefaultSweepW1{0.6, 0.5, 0.4, 0.3, 0.2, 0.1};

// Flags of the rows not dominated under joint minimization of the two
// losses.
std::vector<bool> nondominated(const std::vector<LossPair>& points);

// One MID per weight pair (w2 = 1 - w1), each with the same seed. Losses and
// drag-free rate come from the test-partition targets.
SweepTable weight_sweep(const ForwardModel& apt, const ForwardModel& drag,
                        const LabeledDataset& apt_data, const std::vector<double>& w1_list,
                        const nn::TrainConfig& cfg, const InverseModel* warm_start = nullptr);

}  // namespace sealid

#endif  // SEALID_INVERSE_H_
