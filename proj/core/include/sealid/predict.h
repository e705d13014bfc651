#ifndef SEALID_PREDICT_H_
#define SEALID_PREDICT_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sealid/dataset.h"
#include "sealid/neural/train.h"

namespace sealid {

// Accuracy summary of a regressor or classifier on one partition. APT errors
// are in millimetres (denormalized).
struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;
  std::optional<double> accuracy_percent;  // classifiers only
  std::size_t n = 0;

  nlohmann::ordered_json to_json() const;
  static MetricReport from_json(const nlohmann::ordered_json& j);
};

// Pooled over every entry.
double metric_mae(const Matrix& pred, const Matrix& truth);
double metric_rmse(const Matrix& pred, const Matrix& truth);
// 1 - SS_res/SS_tot about the truth column mean, averaged uniformly over
// columns. Needs n >= 2; throws kDegenerateTruth when a truth column is
// constant.
double metric_r2(const Matrix& pred, const Matrix& truth);
MetricReport regression_report(const Matrix& pred, const Matrix& truth);

// Binary decision rule: probability >= 0.5 is class 1.
inline constexpr double kDecisionThreshold = 0.5;
int binary_decision(double probability);
double binary_accuracy_percent(const Matrix& prob, const Matrix& truth);
double multiclass_accuracy_percent(const Matrix& prob, const Matrix& one_hot_truth);

enum class ForwardKind { kAptDnn, kAptCnn, kDragBinary, kDragMulticlass };

std::string_view forward_kind_name(ForwardKind k);

struct PartitionMetrics {
  MetricReport val;
  MetricReport test;
};

// Trained design -> performance surrogate (dense variants).
struct ForwardModel {
  ForwardKind kind = ForwardKind::kAptDnn;
  std::string arch;  // "deep", "baseline", "classifier", ...
  nn::LayerStack stack;
  NormSpec x_norm;
  std::optional<NormSpec> y_norm;  // APT regressors only
  nn::TrainConfig config;
  nn::TrainHistory history;
  PartitionMetrics metrics;

  nn::ModelDocument to_document() const;
  static ForwardModel from_document(const nn::ModelDocument& doc);
};

// Hidden sizes of the deep APT regressor and of the 1x128 baseline.
inline const std::vector<int> kAptDeepHidden{256, 256, 128, 64};
inline const std::vector<int> kAptBaselineHidden{128};

nn::TrainConfig default_apt_config();
nn::TrainConfig default_drag_binary_config();
nn::TrainConfig default_drag_multiclass_config();

// 13 -> hidden... -> 3 with relu between dense layers and a linear head,
// mse on normalized labels. Metrics are in millimetres.
ForwardModel train_apt_dnn(const LabeledDataset& ds, const nn::TrainConfig& cfg,
                           const std::vector<int>& hidden = kAptDeepHidden);

// 13 -> 128 -> 64 -> 1 sigmoid, bce. Throws kEmptyClass if any partition is
// missing a class.
ForwardModel train_drag_binary(const LabeledDataset& ds, const nn::TrainConfig& cfg);

// Amplified rows only: 13 -> 128 -> 128 -> 7 softmax, ce. Throws kEmptyClass
// if the training partition is missing an onset class.
ForwardModel train_drag_multiclass(const LabeledDataset& ds, const nn::TrainConfig& cfg);

// Normalized-input forward pass.
Matrix predict_normalized(const ForwardModel& m, const Matrix& u);
// Physical designs in, physical APT (mm) out. kMissingNormSpec without y_norm.
std::vector<oracle::Apt> predict_apt(const ForwardModel& m, const std::vector<DesignVector>& xs);
std::vector<double> predict_drag_probability(const ForwardModel& m,
                                             const std::vector<DesignVector>& xs);
std::vector<int> predict_onset(const ForwardModel& m, const std::vector<DesignVector>& xs);

Matrix designs_to_normalized(const NormSpec& x_norm, const std::vector<DesignVector>& xs);

// ---------------------------------------------------------------- CNN

struct CnnOptions {
  int resolution = 102;
  std::vector<int> channels{8, 16, 32, 64, 64};
  // Dense widths after the concatenated [image features, u] vector; the
  // final 3-output layer is appended, giving seven dense layers in total.
  std::vector<int> head_hidden{256, 128, 128, 64, 64, 32};
  bool use_design_inputs = true;
};

// Five 3x3 conv layers (relu), 2x2 max pooling after the first four, flatten,
// then a dense regressor over the image features concatenated with the 13
// normalized design variables.
struct CnnModel {
  CnnOptions options;
  nn::LayerStack features;  // image -> flat feature vector
  nn::LayerStack head;      // [features, u] -> 3
  NormSpec x_norm;
  NormSpec y_norm;
  nn::TrainConfig config;
  nn::TrainHistory history;
  PartitionMetrics metrics;

  // Normalized APT for a batch of images (rows of resolution^2 pixels) and
  // the matching normalized designs.
  Matrix forward(const Matrix& images, const Matrix& u) const;

  nn::ModelDocument to_document() const;
  static CnnModel from_document(const nn::ModelDocument& doc);
};

CnnModel make_cnn(const CnnOptions& opt, std::uint64_t seed);

// One row of resolution^2 pixel values (0/1) per design.
Matrix rasterize_designs(const std::vector<DesignVector>& xs, int resolution);

// Images default to rasterized geometry; pass `images` to override (rows in
// dataset order for the train, val and test partitions respectively).
struct CnnImages {
  Matrix train, val, test;
};
CnnImages rasterize_partitions(const LabeledDataset& ds, int resolution);

CnnModel train_apt_cnn(const LabeledDataset& ds, const nn::TrainConfig& cfg,
                       const CnnOptions& opt = {},
                       const std::optional<CnnImages>& images = std::nullopt);

}  // namespace sealid

#endif  // SEALID_PREDICT_H_
