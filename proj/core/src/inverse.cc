#include "sealid/inverse.h"

#include <chrono>
#include <cmath>

#include "sealid/csv.h"
#include "sealid/error.h"

namespace sealid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix zeros_like_rows(Eigen::Index rows) { return Matrix::Zero(rows, 1); }

nn::LayerStack frozen_copy(const nn::LayerStack& s) {
  nn::LayerStack c = s;
  c.set_frozen(true);
  c.clear_cache();
  return c;
}

nn::LayerStack make_inverse_stack(int inputs, std::uint64_t seed) {
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), kInverseHidden.begin(), kInverseHidden.end());
  sizes.push_back(static_cast<int>(kNumDesignVars));
  nn::LayerStack s = nn::make_mlp(sizes, nn::Activation::kRelu, nn::Activation::kSigmoid);
  Rng rng(derive_seed(seed, "inverse-init"));
  s.init(rng);
  return s;
}

void check_apt_forward(const ForwardModel& apt) {
  if (apt.kind != ForwardKind::kAptDnn || !apt.y_norm ||
      apt.stack.input_size() != static_cast<int>(kNumDesignVars) || apt.stack.output_size() != 3) {
    throw Error(ErrorCode::kIncompatibleForward, "inverse design needs a 13 -> 3 APT regressor");
  }
}

}  // namespace

std::string_view inverse_kind_name(InverseKind k) { return k == InverseKind::kSid ? "sid" : "mid"; }

// ---------------------------------------------------------------- model

Matrix InverseModel::inputs_for(const Matrix& apt_targets) const {
  if (apt_targets.cols() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "APT targets need 3 columns");
  }
  if (kind == InverseKind::kSid) return apt_targets;
  Matrix t(apt_targets.rows(), 4);
  t << apt_targets, zeros_like_rows(apt_targets.rows());
  return t;
}

Matrix InverseModel::generate(const Matrix& apt_targets) const {
  return inverse.forward(inputs_for(apt_targets));
}

Matrix InverseModel::composite(const Matrix& apt_targets) const {
  return apt_forward.forward(generate(apt_targets));
}

Matrix InverseModel::drag_probability(const Matrix& apt_targets) const {
  if (!drag_forward) throw Error(ErrorCode::kIncompatibleForward, "model has no drag forward");
  return drag_forward->forward(generate(apt_targets));
}

std::string forward_fingerprint(const InverseModel& m) {
  std::string s = m.apt_forward.to_json().dump();
  if (m.drag_forward) s += "\n" + m.drag_forward->to_json().dump();
  return s;
}

nn::ModelDocument InverseModel::to_document() const {
  nn::ModelDocument doc;
  doc.kind = std::string(inverse_kind_name(kind));
  doc.stacks.emplace_back("inverse", inverse);
  doc.stacks.emplace_back("apt_forward", apt_forward);
  if (drag_forward) doc.stacks.emplace_back("drag_forward", *drag_forward);
  doc.norm_spec = {{"x", x_norm.to_json()}, {"y", y_norm.to_json()}};
  doc.config = config;
  doc.seed = config.seed;
  doc.metadata["weights"] = {{"w1", weights.w1},
                             {"w2", weights.w2},
                             {"kappa_apt", weights.kappa_apt},
                             {"kappa_drag", weights.kappa_drag}};
  doc.metadata["history"] = history.to_json();
  doc.metadata["final_losses"] =
      final_losses ? nlohmann::ordered_json{{"loss_apt", final_losses->loss_apt},
                                            {"loss_drag", final_losses->loss_drag}}
                   : nlohmann::ordered_json(nullptr);
  return doc;
}

InverseModel InverseModel::from_document(const nn::ModelDocument& doc) {
  InverseModel m;
  if (doc.kind == "sid") {
    m.kind = InverseKind::kSid;
  } else if (doc.kind == "mid") {
    m.kind = InverseKind::kMid;
  } else {
    throw Error(ErrorCode::kSchemaMismatch, "not an inverse model: " + doc.kind);
  }
  m.inverse = doc.stack("inverse");
  m.apt_forward = frozen_copy(doc.stack("apt_forward"));
  if (m.kind == InverseKind::kMid) m.drag_forward = frozen_copy(doc.stack("drag_forward"));
  m.config = doc.config;
  try {
    m.x_norm = NormSpec::from_json(doc.norm_spec.at("x"));
    m.y_norm = NormSpec::from_json(doc.norm_spec.at("y"));
    const auto& w = doc.metadata.at("weights");
    m.weights = {w.at("w1").get<double>(), w.at("w2").get<double>(),
                 w.at("kappa_apt").get<double>(), w.at("kappa_drag").get<double>()};
    m.history = nn::TrainHistory::from_json(doc.metadata.at("history"));
    const auto& f = doc.metadata.at("final_losses");
    if (!f.is_null()) m.final_losses = LossPair{f.at("loss_apt").get<double>(), f.at("loss_drag").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("inverse model: ") + e.what());
  }
  if (m.inverse.input_size() != m.target_size() ||
      m.inverse.output_size() != static_cast<int>(kNumDesignVars)) {
    throw Error(ErrorCode::kShapeMismatch, "inverse stack has the wrong shape");
  }
  return m;
}

// ---------------------------------------------------------------- builders

InverseModel build_sid(const ForwardModel& apt, std::uint64_t seed) {
  check_apt_forward(apt);
  InverseModel m;
  m.kind = InverseKind::kSid;
  m.inverse = make_inverse_stack(3, seed);
  m.apt_forward = frozen_copy(apt.stack);
  m.x_norm = apt.x_norm;
  m.y_norm = *apt.y_norm;
  m.weights = {1.0, 0.0, 1.0, 1.0};
  m.config = default_sid_config();
  m.config.seed = seed;
  return m;
}

InverseModel build_mid(const ForwardModel& apt, const ForwardModel& drag, std::uint64_t seed,
                       const LossWeights& weights, const InverseModel* warm_start) {
  check_apt_forward(apt);
  if (drag.kind != ForwardKind::kDragBinary ||
      drag.stack.input_size() != static_cast<int>(kNumDesignVars) ||
      drag.stack.output_size() != 1 ||
      drag.stack.layer(drag.stack.size() - 1).kind() != nn::LayerKind::kSigmoid) {
    throw Error(ErrorCode::kIncompatibleForward, "MID needs a binary drag classifier");
  }
  if (!(apt.x_norm == drag.x_norm)) {
    throw Error(ErrorCode::kNormSpecMismatch, "APT and drag models use different x norm_specs");
  }
  if (weights.w1 < 0.0 || weights.w2 < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  }
  InverseModel m;
  m.kind = InverseKind::kMid;
  m.apt_forward = frozen_copy(apt.stack);
  m.drag_forward = frozen_copy(drag.stack);
  m.x_norm = apt.x_norm;
  m.y_norm = *apt.y_norm;
  m.weights = weights;
  m.config = default_mid_config();
  m.config.seed = seed;
  if (warm_start == nullptr) {
    m.inverse = make_inverse_stack(4, seed);
    return m;
  }
  if (warm_start->kind != InverseKind::kSid || !(warm_start->y_norm == m.y_norm)) {
    throw Error(ErrorCode::kIncompatibleForward, "warm start must be a SID on the same labels");
  }
  const auto& first = dynamic_cast<const nn::Dense&>(warm_start->inverse.layer(0));
  auto widened = std::make_unique<nn::Dense>(4, first.output_shape().channels);
  widened->weights().setZero();
  widened->weights().topRows(3) = first.weights();
  widened->bias() = first.bias();
  m.inverse.add(std::move(widened));
  for (std::size_t i = 1; i < warm_start->inverse.size(); ++i) {
    m.inverse.add(warm_start->inverse.layer(i).clone());
  }
  m.inverse.set_frozen(false);
  return m;
}

nn::TrainConfig default_sid_config() {
  nn::TrainConfig c;
  c.learning_rate = 5e-4;
  c.batch_size = 128;
  c.loss_kind = nn::LossKind::kMse;
  return c;
}

nn::TrainConfig default_mid_config() {
  nn::TrainConfig c;
  c.learning_rate = 1e-5;
  c.batch_size = 128;
  c.loss_kind = nn::LossKind::kComposite;
  return c;
}

// ---------------------------------------------------------------- losses

double mid_loss(const LossPair& parts, const LossWeights& w) {
  return w.w1 * w.kappa_apt * parts.loss_apt + w.w2 * w.kappa_drag * parts.loss_drag;
}

double mid_loss(const Matrix& apt_pred, const Matrix& apt_target, const Matrix& drag_prob,
                const LossWeights& w) {
  const LossPair p{nn::mse(apt_pred, apt_target).value,
                   nn::bce(drag_prob, Matrix::Zero(drag_prob.rows(), drag_prob.cols())).value};
  return mid_loss(p, w);
}

LossPair loss_pair(const InverseModel& m, const Matrix& apt_targets) {
  const Matrix u = m.generate(apt_targets);
  LossPair p;
  p.loss_apt = nn::mse(m.apt_forward.forward(u), apt_targets).value;
  if (m.drag_forward) {
    const Matrix prob = m.drag_forward->forward(u);
    p.loss_drag = nn::bce(prob, Matrix::Zero(prob.rows(), 1)).value;
  }
  return p;
}

// ---------------------------------------------------------------- training

namespace {

class TandemObjective final : public nn::Objective {
 public:
  TandemObjective(InverseModel& m, Matrix train_targets, Matrix val_targets)
      : m_(m),
        train_in_(m.inputs_for(train_targets)),
        train_apt_(std::move(train_targets)),
        val_apt_(std::move(val_targets)) {}

  std::size_t train_size() const override { return static_cast<std::size_t>(train_apt_.rows()); }

  double batch_step(std::span<const std::size_t> rows) override {
    const Matrix t = nn::gather_rows(train_in_, rows);
    const Matrix target = nn::gather_rows(train_apt_, rows);
    const Matrix u = m_.inverse.forward_train(t);
    const Matrix apt = m_.apt_forward.forward_train(u);
    const nn::LossResult r = nn::mse(apt, target);
    if (m_.kind == InverseKind::kSid) {
      m_.inverse.backward(m_.apt_forward.backward(r.grad));
      return r.value;
    }
    const double ka = m_.weights.w1 * m_.weights.kappa_apt;
    const double kd = m_.weights.w2 * m_.weights.kappa_drag;
    Matrix gu = m_.apt_forward.backward(ka * r.grad);
    double loss = ka * r.value;
    if (kd > 0.0) {
      const Matrix p = m_.drag_forward->forward_train(u);
      const Matrix zero = Matrix::Zero(p.rows(), 1);
      gu += m_.drag_forward->backward(kd * nn::bce_logit_grad(p, zero), /*skip_last=*/true);
      loss += kd * nn::bce(p, zero).value;
    }
    m_.inverse.backward(gu);
    return loss;
  }

  double validation_loss() override {
    const LossPair p = loss_pair(m_, val_apt_);
    return m_.kind == InverseKind::kSid ? p.loss_apt : mid_loss(p, m_.weights);
  }

  std::vector<nn::Param*> trainable_params() override { return m_.inverse.trainable_params(); }

 private:
  InverseModel& m_;
  Matrix train_in_;
  Matrix train_apt_;
  Matrix val_apt_;
};

void train_tandem(InverseModel& m, const LabeledDataset& apt, const nn::TrainConfig& cfg) {
  if (apt.task != DatasetTask::kApt || !apt.y_norm) {
    throw Error(ErrorCode::kSchemaMismatch, "inverse training needs the apt dataset");
  }
  if (!(*apt.y_norm == m.y_norm)) {
    throw Error(ErrorCode::kNormSpecMismatch, "dataset labels differ from the forward model's");
  }
  m.config = cfg;
  m.config.loss_kind = m.kind == InverseKind::kSid ? nn::LossKind::kMse : nn::LossKind::kComposite;
  TandemObjective obj(m, apt.apt_labels(Split::kTrain), apt.apt_labels(Split::kVal));
  m.history = nn::fit(obj, m.config);
  m.inverse.clear_cache();
  m.apt_forward.clear_cache();
  if (m.drag_forward) m.drag_forward->clear_cache();
  if (apt.count(Split::kTest) > 0) m.final_losses = loss_pair(m, apt.apt_labels(Split::kTest));
}

}  // namespace

void train_sid(InverseModel& m, const LabeledDataset& apt, const nn::TrainConfig& cfg) {
  if (m.kind != InverseKind::kSid) throw Error(ErrorCode::kInvalidArgument, "train_sid needs a SID");
  train_tandem(m, apt, cfg);
}

void train_mid(InverseModel& m, const LabeledDataset& apt, const nn::TrainConfig& cfg) {
  if (m.kind != InverseKind::kMid) throw Error(ErrorCode::kInvalidArgument, "train_mid needs a MID");
  train_tandem(m, apt, cfg);
}

// ---------------------------------------------------------------- inference

std::optional<std::string> target_range_warning(const NormSpec& y_norm, const oracle::Apt& t) {
  for (std::size_t k = 0; k < 3; ++k) {
    const NormColumn& c = y_norm.columns().at(k);
    const double pad = 0.1 * (c.max - c.min);
    if (t[k] < c.min - pad || t[k] > c.max + pad) {
      return "OutOfRangeTarget: APT" + std::to_string(k + 1) + " = " + csv::format_double(t[k]) +
             " mm lies outside the training range [" + csv::format_double(c.min) + ", " +
             csv::format_double(c.max) + "] widened by 10%";
    }
  }
  return std::nullopt;
}

DesignRecord infer_design(const InverseModel& m, const oracle::Apt& targets, bool verify) {
  DesignRecord rec;
  rec.targets = targets;
  rec.warning = target_range_warning(m.y_norm, targets);
  Matrix t(1, 3);
  for (int k = 0; k < 3; ++k) t(0, k) = m.y_norm.normalize(static_cast<std::size_t>(k), targets[static_cast<std::size_t>(k)]);

  const auto t0 = Clock::now();
  const Matrix u = m.generate(t);
  for (std::size_t i = 0; i < kNumDesignVars; ++i) rec.u[i] = u(0, static_cast<Eigen::Index>(i));
  rec.x = denormalize_design(rec.u);
  rec.seconds = seconds_since(t0);

  rec.violations = validate(rec.x);
  const Matrix apt = m.apt_forward.forward(u);
  for (std::size_t k = 0; k < 3; ++k) {
    rec.surrogate_apt[k] = m.y_norm.denormalize(k, apt(0, static_cast<Eigen::Index>(k)));
  }
  if (m.drag_forward) rec.drag_probability = m.drag_forward->forward(u)(0, 0);
  if (verify) rec.oracle = oracle::evaluate(NormalizedDesign{rec.u});
  return rec;
}

nlohmann::ordered_json DesignRecord::to_json() const {
  nlohmann::ordered_json j;
  j["targets"] = targets;
  nlohmann::ordered_json xj = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kNumDesignVars; ++i) xj[std::string(kDesignVariables[i].name)] = x[i];
  j["x"] = xj;
  j["u"] = u;
  j["valid"] = violations.empty();
  j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    j["violations"].push_back({{"constraint", v.constraint}, {"message", v.message}});
  }
  j["surrogate"] = {{"apt", surrogate_apt},
                    {"drag_probability", drag_probability ? nlohmann::ordered_json(*drag_probability)
                                                          : nlohmann::ordered_json(nullptr)}};
  if (oracle) {
    j["oracle"] = {{"apt", oracle->apt},
                   {"rollback", oracle->rollback},
                   {"compliance", oracle->compliance},
                   {"drag_score", oracle->drag_score},
                   {"drag_amplified", oracle->drag.amplified},
                   {"onset_bar", oracle->drag.onset_bar ? nlohmann::ordered_json(*oracle->drag.onset_bar)
                                                        : nlohmann::ordered_json(nullptr)}};
  } else {
    j["oracle"] = nullptr;
  }
  j["seconds"] = seconds;
  j["warning"] = warning ? nlohmann::ordered_json(*warning) : nlohmann::ordered_json(nullptr);
  return j;
}

InverseEvaluation evaluate_inverse(const InverseModel& m, const Matrix& apt_targets_mm) {
  if (apt_targets_mm.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "no targets");
  const Matrix t = m.y_norm.normalize(apt_targets_mm);
  const Eigen::Index n = t.rows();

  Matrix u(n, static_cast<Eigen::Index>(kNumDesignVars));
  double total_seconds = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto t0 = Clock::now();
    u.row(i) = m.generate(t.row(i));
    total_seconds += seconds_since(t0);
  }

  InverseEvaluation ev;
  ev.mean_seconds = total_seconds / static_cast<double>(n);
  ev.surrogate = regression_report(m.y_norm.denormalize(m.apt_forward.forward(u)), apt_targets_mm);

  Matrix oracle_apt(n, 3);
  std::size_t free = 0, invalid = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    NormalizedDesign d;
    for (std::size_t k = 0; k < kNumDesignVars; ++k) d.u[k] = u(i, static_cast<Eigen::Index>(k));
    const oracle::Eval e = oracle::evaluate(d);
    for (int k = 0; k < 3; ++k) oracle_apt(i, k) = e.apt[static_cast<std::size_t>(k)];
    if (!e.drag.amplified) ++free;
    if (!is_valid(denormalize_design(d))) ++invalid;
  }
  ev.oracle = regression_report(oracle_apt, apt_targets_mm);
  ev.drag_free_rate = static_cast<double>(free) / static_cast<double>(n);
  ev.invalid_fraction = static_cast<double>(invalid) / static_cast<double>(n);

  ev.losses.loss_apt = nn::mse(m.apt_forward.forward(u), t).value;
  if (m.drag_forward) {
    const Matrix p = m.drag_forward->forward(u);
    ev.losses.loss_drag = nn::bce(p, Matrix::Zero(n, 1)).value;
  }
  return ev;
}

// ---------------------------------------------------------------- sweep

std::vector<bool> nondominated(const std::vector<LossPair>& points) {
  std::vector<bool> flags(points.size(), true);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      const auto& a = points[j];
      const auto& b = points[i];
      if (a.loss_apt <= b.loss_apt && a.loss_drag <= b.loss_drag &&
          (a.loss_apt < b.loss_apt || a.loss_drag < b.loss_drag)) {
        flags[i] = false;
        break;
      }
    }
  }
  return flags;
}

std::string SweepTable::to_csv() const {
  std::string out = "w1,w2,loss_apt,loss_drag,drag_free_rate,nondominated\n";
  for (const auto& r : rows) {
    out += csv::format_double(r.w1) + "," + csv::format_double(r.w2) + "," +
           csv::format_double(r.loss_apt) + "," + csv::format_double(r.loss_drag) + "," +
           csv::format_double(r.drag_free_rate) + "," + (r.nondominated ? "true" : "false") + "\n";
  }
  return out;
}

SweepTable weight_sweep(const ForwardModel& apt, const ForwardModel& drag,
                        const LabeledDataset& apt_data, const std::vector<double>& w1_list,
                        const nn::TrainConfig& cfg, const InverseModel* warm_start) {
  if (w1_list.empty()) throw Error(ErrorCode::kInvalidArgument, "weight list is empty");
  SweepTable table;
  std::vector<LossPair> points;
  const Matrix test_targets = apt_data.apt_labels(Split::kTest, false);
  for (double w1 : w1_list) {
    if (!(w1 > 0.0 && w1 < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "sweep weights must lie in (0, 1)");
    }
    // Round away the binary residue of 1 - w1 (e.g. 0.30000000000000004).
    const double w2 = std::round((1.0 - w1) * 1e12) / 1e12;
    LossWeights w;
    w.w1 = w1;
    w.w2 = w2;
    InverseModel m = build_mid(apt, drag, cfg.seed, w, warm_start);
    train_mid(m, apt_data, cfg);
    const InverseEvaluation ev = evaluate_inverse(m, test_targets);
    table.rows.push_back({w1, w2, ev.losses.loss_apt, ev.losses.loss_drag, ev.drag_free_rate, false});
    points.push_back(ev.losses);
  }
  const auto flags = nondominated(points);
  for (std::size_t i = 0; i < flags.size(); ++i) table.rows[i].nondominated = flags[i];
  return table;
}

}  // namespace sealid
