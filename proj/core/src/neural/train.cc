#include "sealid/neural/train.h"

#include <cmath>
#include <cstdio>

#include "sealid/csv.h"
#include "sealid/error.h"
#include "sealid/neural/adam.h"

namespace sealid::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (early_stop_patience < 1) throw Error(ErrorCode::kInvalidArgument, "patience must be >= 1");
  if (max_epochs < 1) throw Error(ErrorCode::kInvalidArgument, "max_epochs must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"early_stop_patience", early_stop_patience},
          {"seed", seed},
          {"loss_kind", loss_kind_name(loss_kind)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.loss_kind = parse_loss_kind(j.at("loss_kind").get<std::string>());
  return c;
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + csv::format_double(e.train_loss) + "," +
           csv::format_double(e.val_loss) + "\n";
  }
  return out;
}

nlohmann::ordered_json TrainHistory::to_json() const {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : epochs) rows.push_back({e.epoch, e.train_loss, e.val_loss});
  return {{"epochs_run", epochs.size()},
          {"best_epoch", best_epoch},
          {"best_val_loss", best_val_loss},
          {"early_stopped", early_stopped},
          {"epochs", rows}};
}

TrainHistory TrainHistory::from_json(const nlohmann::ordered_json& j) {
  TrainHistory h;
  try {
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    h.best_val_loss = j.at("best_val_loss").get<double>();
    h.early_stopped = j.at("early_stopped").get<bool>();
    for (const auto& r : j.at("epochs")) {
      h.epochs.push_back({r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>()});
    }
    if (j.at("epochs_run").get<std::size_t>() != h.epochs.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "history: epochs_run disagrees with the epoch list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("history: ") + e.what());
  }
  return h;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

TrainHistory fit(Objective& objective, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = objective.train_size();
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "no training rows");

  std::vector<Param*> params = objective.trainable_params();
  Adam adam(cfg.learning_rate);
  Rng rng(cfg.seed);

  auto snapshot = [&params] {
    std::vector<Matrix> s;
    s.reserve(params.size());
    for (const Param* p : params) s.push_back(p->value);
    return s;
  };

  TrainHistory hist;
  std::vector<Matrix> best = snapshot();
  hist.best_val_loss = objective.validation_loss();
  if (!std::isfinite(hist.best_val_loss)) {
    throw Error(ErrorCode::kDiverged, "initial validation loss is not finite");
  }
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = rng.permutation(n);
    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      const double loss = objective.batch_step(rows);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDiverged, "training loss became non-finite at epoch " +
                                              std::to_string(epoch));
      }
      if (!params.empty()) adam.step(params);
      weighted += loss * static_cast<double>(len);
    }
    const double val = objective.validation_loss();
    if (!std::isfinite(val)) {
      throw Error(ErrorCode::kDiverged,
                  "validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    hist.epochs.push_back({epoch, weighted / static_cast<double>(n), val});
    if (val < hist.best_val_loss || hist.best_epoch == 0) {
      // The first epoch always becomes the baseline checkpoint.
      hist.best_val_loss = val;
      hist.best_epoch = epoch;
      best = snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      hist.early_stopped = true;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  return hist;
}

// ---------------------------------------------------------------- supervised

SupervisedObjective::SupervisedObjective(LayerStack& stack, Matrix x_train, Matrix y_train,
                                         Matrix x_val, Matrix y_val, LossKind loss)
    : stack_(stack),
      x_train_(std::move(x_train)),
      y_train_(std::move(y_train)),
      x_val_(std::move(x_val)),
      y_val_(std::move(y_val)),
      loss_(loss) {
  if (x_train_.rows() != y_train_.rows() || x_val_.rows() != y_val_.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "inputs and labels have different row counts");
  }
  if (x_val_.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "no validation rows");
  if (loss_ == LossKind::kComposite) {
    throw Error(ErrorCode::kInvalidArgument, "composite loss needs a custom objective");
  }
}

double SupervisedObjective::loss_value(LossKind kind, const Matrix& pred, const Matrix& target) {
  switch (kind) {
    case LossKind::kMse: return mse(pred, target).value;
    case LossKind::kBce: return bce(pred, target).value;
    case LossKind::kCe: return ce(pred, target).value;
    case LossKind::kComposite: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "composite loss needs a custom objective");
}

double SupervisedObjective::batch_step(std::span<const std::size_t> rows) {
  const Matrix x = gather_rows(x_train_, rows);
  const Matrix y = gather_rows(y_train_, rows);
  const Matrix pred = stack_.forward_train(x);
  const LayerKind head = stack_.layer(stack_.size() - 1).kind();
  if (loss_ == LossKind::kBce && head == LayerKind::kSigmoid) {
    stack_.backward(bce_logit_grad(pred, y), /*skip_last=*/true);
    return bce(pred, y).value;
  }
  if (loss_ == LossKind::kCe && head == LayerKind::kSoftmax) {
    stack_.backward(ce_logit_grad(pred, y), /*skip_last=*/true);
    return ce(pred, y).value;
  }
  LossResult r;
  switch (loss_) {
    case LossKind::kMse: r = mse(pred, y); break;
    case LossKind::kBce: r = bce(pred, y); break;
    default: r = ce(pred, y); break;
  }
  stack_.backward(r.grad);
  return r.value;
}

double SupervisedObjective::validation_loss() {
  return loss_value(loss_, stack_.forward(x_val_), y_val_);
}

TrainHistory train_supervised(LayerStack& stack, const Matrix& x_train, const Matrix& y_train,
                              const Matrix& x_val, const Matrix& y_val, const TrainConfig& cfg) {
  SupervisedObjective obj(stack, x_train, y_train, x_val, y_val, cfg.loss_kind);
  TrainHistory h = fit(obj, cfg);
  stack.clear_cache();
  return h;
}

// ---------------------------------------------------------------- model files

LayerStack& ModelDocument::stack(const std::string& name) {
  for (auto& [n, s] : stacks) {
    if (n == name) return s;
  }
  throw Error(ErrorCode::kSchemaMismatch, "model has no stack '" + name + "'");
}

const LayerStack& ModelDocument::stack(const std::string& name) const {
  for (const auto& [n, s] : stacks) {
    if (n == name) return s;
  }
  throw Error(ErrorCode::kSchemaMismatch, "model has no stack '" + name + "'");
}

bool ModelDocument::has_stack(const std::string& name) const {
  for (const auto& [n, s] : stacks) {
    if (n == name) return true;
  }
  return false;
}

nlohmann::ordered_json model_to_json(const ModelDocument& doc) {
  nlohmann::ordered_json j;
  j["schema_version"] = kModelSchemaVersion;
  j["kind"] = doc.kind;
  j["stacks"] = nlohmann::ordered_json::object();
  for (const auto& [name, stack] : doc.stacks) j["stacks"][name] = stack.to_json();
  j["norm_spec"] = doc.norm_spec;
  j["train_config"] = doc.config.to_json();
  j["seed"] = doc.seed;
  j["metadata"] = doc.metadata;
  return j;
}

ModelDocument model_from_json(const nlohmann::ordered_json& j) {
  ModelDocument doc;
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch, "unsupported model schema_version");
    }
    doc.kind = j.at("kind").get<std::string>();
    nlohmann::ordered_json ordered = j.at("stacks");
    for (auto it = ordered.begin(); it != ordered.end(); ++it) {
      doc.stacks.emplace_back(it.key(), LayerStack::from_json(it.value()));
    }
    doc.norm_spec = j.at("norm_spec");
    doc.config = TrainConfig::from_json(j.at("train_config"));
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.metadata = j.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("model: ") + e.what());
  }
  if (doc.stacks.empty()) throw Error(ErrorCode::kSchemaMismatch, "model has no stacks");
  return doc;
}

std::string model_to_text(const ModelDocument& doc) { return model_to_json(doc).dump(1) + "\n"; }

void save_model(const ModelDocument& doc, const std::string& path) {
  csv::write_file(path, model_to_text(doc));
}

ModelDocument parse_model(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ModelDocument load_model(const std::string& path) { return parse_model(csv::read_file(path)); }

}  // namespace sealid::nn
