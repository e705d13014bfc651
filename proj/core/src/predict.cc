#include "sealid/predict.h"

#include <cmath>

#include "sealid/error.h"

namespace sealid {

// ---------------------------------------------------------------- metrics

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["mae"] = mae;
  j["rmse"] = rmse;
  j["r2"] = r2 ? nlohmann::ordered_json(*r2) : nlohmann::ordered_json(nullptr);
  j["accuracy_percent"] =
      accuracy_percent ? nlohmann::ordered_json(*accuracy_percent) : nlohmann::ordered_json(nullptr);
  j["n"] = n;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::ordered_json& j) {
  MetricReport r;
  r.mae = j.at("mae").get<double>();
  r.rmse = j.at("rmse").get<double>();
  if (!j.at("r2").is_null()) r.r2 = j.at("r2").get<double>();
  if (!j.at("accuracy_percent").is_null()) r.accuracy_percent = j.at("accuracy_percent").get<double>();
  r.n = j.at("n").get<std::size_t>();
  return r;
}

namespace {

void same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "prediction and truth shapes differ");
  }
}

}  // namespace

double metric_mae(const Matrix& pred, const Matrix& truth) {
  same_shape(pred, truth);
  return (pred - truth).cwiseAbs().sum() / static_cast<double>(pred.size());
}

double metric_rmse(const Matrix& pred, const Matrix& truth) {
  same_shape(pred, truth);
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double metric_r2(const Matrix& pred, const Matrix& truth) {
  same_shape(pred, truth);
  if (truth.rows() < 2) throw Error(ErrorCode::kDegenerateTruth, "r2 needs at least 2 rows");
  double total = 0.0;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) {
      throw Error(ErrorCode::kDegenerateTruth,
                  "truth column " + std::to_string(c) + " is constant");
    }
    const double ss_res = (pred.col(c) - truth.col(c)).squaredNorm();
    total += 1.0 - ss_res / ss_tot;
  }
  return total / static_cast<double>(truth.cols());
}

MetricReport regression_report(const Matrix& pred, const Matrix& truth) {
  MetricReport r;
  r.mae = metric_mae(pred, truth);
  r.rmse = metric_rmse(pred, truth);
  try {
    r.r2 = metric_r2(pred, truth);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateTruth) throw;
  }
  r.n = static_cast<std::size_t>(pred.rows());
  return r;
}

int binary_decision(double probability) { return probability >= kDecisionThreshold ? 1 : 0; }

double binary_accuracy_percent(const Matrix& prob, const Matrix& truth) {
  same_shape(prob, truth);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    if (binary_decision(prob.data()[i]) == static_cast<int>(truth.data()[i])) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(prob.size());
}

double multiclass_accuracy_percent(const Matrix& prob, const Matrix& one_hot_truth) {
  same_shape(prob, one_hot_truth);
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < prob.rows(); ++r) {
    Eigen::Index p = 0, t = 0;
    prob.row(r).maxCoeff(&p);
    one_hot_truth.row(r).maxCoeff(&t);
    if (p == t) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(prob.rows());
}

// ---------------------------------------------------------------- models

std::string_view forward_kind_name(ForwardKind k) {
  switch (k) {
    case ForwardKind::kAptDnn: return "apt-dnn";
    case ForwardKind::kAptCnn: return "apt-cnn";
    case ForwardKind::kDragBinary: return "drag-bin";
    case ForwardKind::kDragMulticlass: return "drag-multi";
  }
  return "?";
}

namespace {

ForwardKind parse_forward_kind(std::string_view s) {
  if (s == "apt-dnn") return ForwardKind::kAptDnn;
  if (s == "apt-cnn") return ForwardKind::kAptCnn;
  if (s == "drag-bin") return ForwardKind::kDragBinary;
  if (s == "drag-multi") return ForwardKind::kDragMulticlass;
  throw Error(ErrorCode::kSchemaMismatch, "not a forward model kind: " + std::string(s));
}

nlohmann::ordered_json norm_json(const NormSpec& x, const std::optional<NormSpec>& y) {
  nlohmann::ordered_json j;
  j["x"] = x.to_json();
  j["y"] = y ? y->to_json() : nlohmann::ordered_json(nullptr);
  return j;
}

nn::LayerStack init_mlp(const std::vector<int>& sizes, nn::Activation head, std::uint64_t seed) {
  nn::LayerStack s = nn::make_mlp(sizes, nn::Activation::kRelu, head);
  Rng rng(derive_seed(seed, "init"));
  s.init(rng);
  return s;
}

std::vector<int> mlp_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void require_classes(const LabeledDataset& ds, Split s, bool binary) {
  const auto rows = ds.select(s);
  if (binary) {
    bool pos = false, neg = false;
    for (const auto* r : rows) (r->drag.amplified ? pos : neg) = true;
    if (!pos || !neg) {
      throw Error(ErrorCode::kEmptyClass,
                  std::string(split_name(s)) + " partition lacks a drag class");
    }
    return;
  }
  std::array<bool, kNumOnsetClasses> seen{};
  for (const auto* r : rows) seen[static_cast<std::size_t>(onset_index(*r->drag.onset_bar))] = true;
  for (std::size_t k = 0; k < kNumOnsetClasses; ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::kEmptyClass, std::string(split_name(s)) + " partition has no " +
                                              std::to_string(30 + 10 * k) + " bar rows");
    }
  }
}

}  // namespace

nn::ModelDocument ForwardModel::to_document() const {
  nn::ModelDocument doc;
  doc.kind = std::string(forward_kind_name(kind));
  doc.stacks.emplace_back("main", stack);
  doc.norm_spec = norm_json(x_norm, y_norm);
  doc.config = config;
  doc.seed = config.seed;
  doc.metadata["arch"] = arch;
  doc.metadata["history"] = history.to_json();
  doc.metadata["metrics"] = {{"val", metrics.val.to_json()}, {"test", metrics.test.to_json()}};
  return doc;
}

ForwardModel ForwardModel::from_document(const nn::ModelDocument& doc) {
  ForwardModel m;
  m.kind = parse_forward_kind(doc.kind);
  if (m.kind == ForwardKind::kAptCnn) {
    throw Error(ErrorCode::kSchemaMismatch, "apt-cnn documents load as CnnModel");
  }
  m.stack = doc.stack("main");
  m.config = doc.config;
  try {
    m.x_norm = NormSpec::from_json(doc.norm_spec.at("x"));
    if (!doc.norm_spec.at("y").is_null()) m.y_norm = NormSpec::from_json(doc.norm_spec.at("y"));
    m.arch = doc.metadata.at("arch").get<std::string>();
    m.history = nn::TrainHistory::from_json(doc.metadata.at("history"));
    m.metrics.val = MetricReport::from_json(doc.metadata.at("metrics").at("val"));
    m.metrics.test = MetricReport::from_json(doc.metadata.at("metrics").at("test"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("forward model: ") + e.what());
  }
  if (m.stack.input_size() != static_cast<int>(m.x_norm.size())) {
    throw Error(ErrorCode::kShapeMismatch, "stack input differs from x norm_spec width");
  }
  return m;
}

nn::TrainConfig default_apt_config() {
  nn::TrainConfig c;
  c.learning_rate = 5e-4;
  c.batch_size = 128;
  c.loss_kind = nn::LossKind::kMse;
  return c;
}

nn::TrainConfig default_drag_binary_config() {
  nn::TrainConfig c;
  c.learning_rate = 0.0055;
  c.batch_size = 128;
  c.loss_kind = nn::LossKind::kBce;
  return c;
}

nn::TrainConfig default_drag_multiclass_config() {
  nn::TrainConfig c;
  c.learning_rate = 0.0002;
  c.batch_size = 128;
  c.loss_kind = nn::LossKind::kCe;
  return c;
}

ForwardModel train_apt_dnn(const LabeledDataset& ds, const nn::TrainConfig& cfg,
                           const std::vector<int>& hidden) {
  if (ds.task != DatasetTask::kApt) {
    throw Error(ErrorCode::kSchemaMismatch, "APT regressor needs an apt dataset");
  }
  if (!ds.y_norm) throw Error(ErrorCode::kMissingNormSpec, "apt dataset lacks label norm_spec");
  ForwardModel m;
  m.kind = ForwardKind::kAptDnn;
  m.arch = hidden == kAptDeepHidden ? "deep" : (hidden == kAptBaselineHidden ? "baseline" : "custom");
  m.x_norm = ds.x_norm;
  m.y_norm = ds.y_norm;
  m.config = cfg;
  m.config.loss_kind = nn::LossKind::kMse;
  m.stack = init_mlp(mlp_sizes(static_cast<int>(kNumDesignVars), hidden, 3),
                     nn::Activation::kNone, cfg.seed);
  m.history = nn::train_supervised(m.stack, ds.inputs(Split::kTrain), ds.apt_labels(Split::kTrain),
                                   ds.inputs(Split::kVal), ds.apt_labels(Split::kVal), m.config);
  for (Split s : {Split::kVal, Split::kTest}) {
    const Matrix pred = m.y_norm->denormalize(m.stack.forward(ds.inputs(s)));
    const MetricReport r = regression_report(pred, ds.apt_labels(s, false));
    (s == Split::kVal ? m.metrics.val : m.metrics.test) = r;
  }
  return m;
}

ForwardModel train_drag_binary(const LabeledDataset& ds, const nn::TrainConfig& cfg) {
  if (ds.task != DatasetTask::kDragBinary) {
    throw Error(ErrorCode::kSchemaMismatch, "binary drag model needs a drag dataset");
  }
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) require_classes(ds, s, true);
  ForwardModel m;
  m.kind = ForwardKind::kDragBinary;
  m.arch = "classifier";
  m.x_norm = ds.x_norm;
  m.config = cfg;
  m.config.loss_kind = nn::LossKind::kBce;
  m.stack = init_mlp({static_cast<int>(kNumDesignVars), 128, 64, 1}, nn::Activation::kSigmoid,
                     cfg.seed);
  m.history = nn::train_supervised(m.stack, ds.inputs(Split::kTrain), ds.drag_labels(Split::kTrain),
                                   ds.inputs(Split::kVal), ds.drag_labels(Split::kVal), m.config);
  for (Split s : {Split::kVal, Split::kTest}) {
    const Matrix prob = m.stack.forward(ds.inputs(s));
    const Matrix truth = ds.drag_labels(s);
    MetricReport r;
    r.mae = metric_mae(prob, truth);
    r.rmse = metric_rmse(prob, truth);
    r.accuracy_percent = binary_accuracy_percent(prob, truth);
    r.n = static_cast<std::size_t>(prob.rows());
    (s == Split::kVal ? m.metrics.val : m.metrics.test) = r;
  }
  return m;
}

ForwardModel train_drag_multiclass(const LabeledDataset& ds, const nn::TrainConfig& cfg) {
  const LabeledDataset view = ds.task == DatasetTask::kDragMulticlass ? ds : multiclass_view(ds);
  require_classes(view, Split::kTrain, false);
  if (view.count(Split::kVal) == 0 || view.count(Split::kTest) == 0) {
    throw Error(ErrorCode::kEmptyClass, "no amplified rows in val or test partition");
  }
  ForwardModel m;
  m.kind = ForwardKind::kDragMulticlass;
  m.arch = "classifier";
  m.x_norm = view.x_norm;
  m.config = cfg;
  m.config.loss_kind = nn::LossKind::kCe;
  m.stack = init_mlp({static_cast<int>(kNumDesignVars), 128, 128, static_cast<int>(kNumOnsetClasses)},
                     nn::Activation::kSoftmax, cfg.seed);
  m.history = nn::train_supervised(m.stack, view.inputs(Split::kTrain),
                                   view.onset_labels(Split::kTrain), view.inputs(Split::kVal),
                                   view.onset_labels(Split::kVal), m.config);
  for (Split s : {Split::kVal, Split::kTest}) {
    const Matrix prob = m.stack.forward(view.inputs(s));
    const Matrix truth = view.onset_labels(s);
    MetricReport r;
    r.mae = metric_mae(prob, truth);
    r.rmse = metric_rmse(prob, truth);
    r.accuracy_percent = multiclass_accuracy_percent(prob, truth);
    r.n = static_cast<std::size_t>(prob.rows());
    (s == Split::kVal ? m.metrics.val : m.metrics.test) = r;
  }
  return m;
}

Matrix designs_to_normalized(const NormSpec& x_norm, const std::vector<DesignVector>& xs) {
  Matrix x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(kNumDesignVars));
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (std::size_t c = 0; c < kNumDesignVars; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = xs[r][c];
    }
  }
  return x_norm.normalize(x);
}

Matrix predict_normalized(const ForwardModel& m, const Matrix& u) { return m.stack.forward(u); }

std::vector<oracle::Apt> predict_apt(const ForwardModel& m, const std::vector<DesignVector>& xs) {
  if (m.kind != ForwardKind::kAptDnn) {
    throw Error(ErrorCode::kShapeMismatch, "model does not predict APT");
  }
  if (!m.y_norm) throw Error(ErrorCode::kMissingNormSpec, "APT model has no label norm_spec");
  const Matrix y = m.y_norm->denormalize(m.stack.forward(designs_to_normalized(m.x_norm, xs)));
  std::vector<oracle::Apt> out(xs.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (int k = 0; k < 3; ++k) out[r][k] = y(static_cast<Eigen::Index>(r), k);
  }
  return out;
}

std::vector<double> predict_drag_probability(const ForwardModel& m,
                                             const std::vector<DesignVector>& xs) {
  if (m.kind != ForwardKind::kDragBinary) {
    throw Error(ErrorCode::kShapeMismatch, "model is not a binary drag classifier");
  }
  const Matrix p = m.stack.forward(designs_to_normalized(m.x_norm, xs));
  std::vector<double> out(xs.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    // Keep the probability strictly inside (0, 1).
    out[r] = std::clamp(p(static_cast<Eigen::Index>(r), 0), nn::kProbClip, 1.0 - nn::kProbClip);
  }
  return out;
}

std::vector<int> predict_onset(const ForwardModel& m, const std::vector<DesignVector>& xs) {
  if (m.kind != ForwardKind::kDragMulticlass) {
    throw Error(ErrorCode::kShapeMismatch, "model is not an onset classifier");
  }
  const Matrix p = m.stack.forward(designs_to_normalized(m.x_norm, xs));
  std::vector<int> out(xs.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    const RowVector row = p.row(static_cast<Eigen::Index>(r));
    out[r] = argmax_decode(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  return out;
}

// ---------------------------------------------------------------- CNN

namespace {

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

class CnnObjective final : public nn::Objective {
 public:
  CnnObjective(CnnModel& model, const CnnImages& images, Matrix u_train, Matrix y_train,
               Matrix u_val, Matrix y_val)
      : model_(model),
        img_train_(images.train),
        img_val_(images.val),
        u_train_(std::move(u_train)),
        y_train_(std::move(y_train)),
        u_val_(std::move(u_val)),
        y_val_(std::move(y_val)) {}

  std::size_t train_size() const override { return static_cast<std::size_t>(u_train_.rows()); }

  double batch_step(std::span<const std::size_t> rows) override {
    const Matrix img = nn::gather_rows(img_train_, rows);
    const Matrix u = nn::gather_rows(u_train_, rows);
    const Matrix y = nn::gather_rows(y_train_, rows);
    const Matrix feat = model_.features.forward_train(img);
    const Matrix head_in = model_.options.use_design_inputs ? concat_cols(feat, u) : feat;
    const Matrix pred = model_.head.forward_train(head_in);
    const nn::LossResult loss = nn::mse(pred, y);
    const Matrix g_in = model_.head.backward(loss.grad);
    model_.features.backward(g_in.leftCols(feat.cols()));
    return loss.value;
  }

  double validation_loss() override {
    return nn::mse(model_.forward(img_val_, u_val_), y_val_).value;
  }

  std::vector<nn::Param*> trainable_params() override {
    auto p = model_.features.trainable_params();
    auto h = model_.head.trainable_params();
    p.insert(p.end(), h.begin(), h.end());
    return p;
  }

 private:
  CnnModel& model_;
  const Matrix& img_train_;
  const Matrix& img_val_;
  Matrix u_train_, y_train_, u_val_, y_val_;
};

}  // namespace

Matrix CnnModel::forward(const Matrix& images, const Matrix& u) const {
  const Matrix feat = features.forward(images);
  return head.forward(options.use_design_inputs ? concat_cols(feat, u) : feat);
}

CnnModel make_cnn(const CnnOptions& opt, std::uint64_t seed) {
  if (opt.resolution < 16) throw Error(ErrorCode::kInvalidArgument, "CNN resolution must be >= 16");
  CnnModel m;
  m.options = opt;
  int h = opt.resolution, w = opt.resolution, c = 1;
  for (std::size_t i = 0; i < opt.channels.size(); ++i) {
    m.features.emplace<nn::Conv2d>(c, opt.channels[i], h, w);
    c = opt.channels[i];
    m.features.emplace<nn::Relu>(nn::Shape3{c, h, w});
    if (i + 1 < opt.channels.size()) {
      m.features.emplace<nn::MaxPool2d>(c, h, w);
      h /= 2;
      w /= 2;
    }
  }
  m.features.emplace<nn::Flatten>(nn::Shape3{c, h, w});
  const int head_in = c * h * w + (opt.use_design_inputs ? static_cast<int>(kNumDesignVars) : 0);
  m.head = nn::make_mlp(mlp_sizes(head_in, opt.head_hidden, 3), nn::Activation::kRelu,
                        nn::Activation::kNone);
  Rng rng(derive_seed(seed, "init"));
  m.features.init(rng);
  m.head.init(rng);
  return m;
}

Matrix rasterize_designs(const std::vector<DesignVector>& xs, int resolution) {
  Matrix out(static_cast<Eigen::Index>(xs.size()),
             static_cast<Eigen::Index>(resolution) * resolution);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    const RasterImage img = rasterize(compute_points(xs[r]), resolution);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = img.pixels[p];
    }
  }
  return out;
}

CnnImages rasterize_partitions(const LabeledDataset& ds, int resolution) {
  auto designs = [&ds](Split s) {
    std::vector<DesignVector> xs;
    for (const auto* r : ds.select(s)) xs.push_back(r->x);
    return xs;
  };
  return {rasterize_designs(designs(Split::kTrain), resolution),
          rasterize_designs(designs(Split::kVal), resolution),
          rasterize_designs(designs(Split::kTest), resolution)};
}

CnnModel train_apt_cnn(const LabeledDataset& ds, const nn::TrainConfig& cfg, const CnnOptions& opt,
                       const std::optional<CnnImages>& images) {
  if (ds.task != DatasetTask::kApt || !ds.y_norm) {
    throw Error(ErrorCode::kSchemaMismatch, "APT CNN needs a normalized apt dataset");
  }
  CnnModel m = make_cnn(opt, cfg.seed);
  m.x_norm = ds.x_norm;
  m.y_norm = *ds.y_norm;
  m.config = cfg;
  m.config.loss_kind = nn::LossKind::kMse;
  const CnnImages imgs = images ? *images : rasterize_partitions(ds, opt.resolution);
  const int pixels = opt.resolution * opt.resolution;
  if (imgs.train.cols() != pixels || imgs.val.cols() != pixels || imgs.test.cols() != pixels) {
    throw Error(ErrorCode::kShapeMismatch, "image rows do not match the CNN resolution");
  }
  CnnObjective obj(m, imgs, ds.inputs(Split::kTrain), ds.apt_labels(Split::kTrain),
                   ds.inputs(Split::kVal), ds.apt_labels(Split::kVal));
  m.history = nn::fit(obj, m.config);
  m.features.clear_cache();
  m.head.clear_cache();
  m.metrics.val = regression_report(m.y_norm.denormalize(m.forward(imgs.val, ds.inputs(Split::kVal))),
                                    ds.apt_labels(Split::kVal, false));
  m.metrics.test =
      regression_report(m.y_norm.denormalize(m.forward(imgs.test, ds.inputs(Split::kTest))),
                        ds.apt_labels(Split::kTest, false));
  return m;
}

nn::ModelDocument CnnModel::to_document() const {
  nn::ModelDocument doc;
  doc.kind = "apt-cnn";
  doc.stacks.emplace_back("features", features);
  doc.stacks.emplace_back("head", head);
  doc.norm_spec = norm_json(x_norm, y_norm);
  doc.config = config;
  doc.seed = config.seed;
  doc.metadata["arch"] = "cnn";
  doc.metadata["resolution"] = options.resolution;
  doc.metadata["channels"] = options.channels;
  doc.metadata["head_hidden"] = options.head_hidden;
  doc.metadata["use_design_inputs"] = options.use_design_inputs;
  doc.metadata["history"] = history.to_json();
  doc.metadata["metrics"] = {{"val", metrics.val.to_json()}, {"test", metrics.test.to_json()}};
  return doc;
}

CnnModel CnnModel::from_document(const nn::ModelDocument& doc) {
  if (doc.kind != "apt-cnn") throw Error(ErrorCode::kSchemaMismatch, "not an apt-cnn document");
  CnnModel m;
  m.features = doc.stack("features");
  m.head = doc.stack("head");
  m.config = doc.config;
  try {
    m.x_norm = NormSpec::from_json(doc.norm_spec.at("x"));
    m.y_norm = NormSpec::from_json(doc.norm_spec.at("y"));
    m.options.resolution = doc.metadata.at("resolution").get<int>();
    m.options.channels = doc.metadata.at("channels").get<std::vector<int>>();
    m.options.head_hidden = doc.metadata.at("head_hidden").get<std::vector<int>>();
    m.options.use_design_inputs = doc.metadata.at("use_design_inputs").get<bool>();
    m.history = nn::TrainHistory::from_json(doc.metadata.at("history"));
    m.metrics.val = MetricReport::from_json(doc.metadata.at("metrics").at("val"));
    m.metrics.test = MetricReport::from_json(doc.metadata.at("metrics").at("test"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("cnn model: ") + e.what());
  }
  return m;
}

}  // namespace sealid
