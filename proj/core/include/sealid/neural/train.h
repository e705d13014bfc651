#ifndef SEALID_NEURAL_TRAIN_H_
#define SEALID_NEURAL_TRAIN_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sealid/neural/loss.h"
#include "sealid/neural/stack.h"

namespace sealid::nn {

struct TrainConfig {
  double learning_rate = 5e-4;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 2000;
  std::size_t early_stop_patience = 50;
  std::uint64_t seed = 42;
  LossKind loss_kind = LossKind::kMse;

  // Throws kInvalidArgument if any invariant fails.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;

  // "epoch,train_loss,val_loss" CSV.
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
  static TrainHistory from_json(const nlohmann::ordered_json& j);
};

// What the training loop needs from a model/data pairing.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t train_size() const = 0;
  // Forward + backward on the given training rows; leaves gradients in the
  // trainable parameters and returns the batch loss.
  virtual double batch_step(std::span<const std::size_t> rows) = 0;
  virtual double validation_loss() = 0;
  virtual std::vector<Param*> trainable_params() = 0;
};

// Mini-batch Adam. Each epoch draws a fresh permutation of the training rows
// from an Rng seeded with cfg.seed; training stops once validation loss has
// not improved for `early_stop_patience` epochs, and the parameters of the
// best epoch are restored. Throws kDiverged on a non-finite loss.
TrainHistory fit(Objective& objective, const TrainConfig& cfg);

// Supervised loss on a single stack. bce/ce use the fused logit gradient
// when the stack ends in sigmoid/softmax.
class SupervisedObjective final : public Objective {
 public:
  SupervisedObjective(LayerStack& stack, Matrix x_train, Matrix y_train, Matrix x_val,
                      Matrix y_val, LossKind loss);

  std::size_t train_size() const override { return static_cast<std::size_t>(x_train_.rows()); }
  double batch_step(std::span<const std::size_t> rows) override;
  double validation_loss() override;
  std::vector<Param*> trainable_params() override { return stack_.trainable_params(); }

  // Loss of `pred` against `target` under this objective's loss kind.
  static double loss_value(LossKind kind, const Matrix& pred, const Matrix& target);

 private:
  LayerStack& stack_;
  Matrix x_train_, y_train_, x_val_, y_val_;
  LossKind loss_;
};

TrainHistory train_supervised(LayerStack& stack, const Matrix& x_train, const Matrix& y_train,
                              const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

// ---------------------------------------------------------------- model files

inline constexpr int kModelSchemaVersion = 1;

// On-disk model document:
// {
//   "schema_version": 1,
//   "kind": "apt-dnn" | "apt-cnn" | "drag-bin" | "drag-multi" | "sid" | "mid",
//   "stacks": {"<name>": {"layers": [...]}, ...},   // insertion ordered
//   "norm_spec": {...},
//   "train_config": {...},
//   "seed": <uint64>,
//   "metadata": {...}
// }
struct ModelDocument {
  std::string kind;
  std::vector<std::pair<std::string, LayerStack>> stacks;
  nlohmann::ordered_json norm_spec = nlohmann::ordered_json::object();
  TrainConfig config;
  std::uint64_t seed = 0;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  LayerStack& stack(const std::string& name);
  const LayerStack& stack(const std::string& name) const;
  bool has_stack(const std::string& name) const;
};

nlohmann::ordered_json model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const nlohmann::ordered_json& j);
std::string model_to_text(const ModelDocument& doc);
void save_model(const ModelDocument& doc, const std::string& path);
// Throws kSchemaMismatch (unparsable, truncated, missing fields) or
// kShapeMismatch (weights inconsistent with layer specs).
ModelDocument load_model(const std::string& path);
ModelDocument parse_model(std::string_view text);

}  // namespace sealid::nn

#endif  // SEALID_NEURAL_TRAIN_H_
