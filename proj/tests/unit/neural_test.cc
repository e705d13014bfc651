#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "sealid/error.h"
#include "sealid/neural/adam.h"
#include "sealid/neural/loss.h"
#include "sealid/neural/stack.h"
#include "sealid/neural/train.h"
#include "gradcheck.h"

using namespace sealid;
using namespace sealid::nn;
using namespace sealid::testing;

namespace {

bool bits_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("gradient check: every layer kind over 24 seeds") {
  for (const auto& kind : layer_kind_factories()) {
    for (std::uint64_t seed = 1; seed <= 24; ++seed) {
      const GradCheck g = grad_check_seed(kind.make, seed, kind.distinct);
      CAPTURE(kind.name);
      CAPTURE(seed);
      CHECK(g.input_error < 1e-4);
      CHECK(g.param_error < 1e-4);
    }
  }
}

TEST_CASE("gradient check: mlp with sigmoid head") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GradCheck g = grad_check_seed(
        [](Rng& rng) {
          return make_mlp({dim(rng, 2, 5), dim(rng, 3, 8), dim(rng, 3, 8), dim(rng, 1, 4)},
                          Activation::kRelu, Activation::kSigmoid);
        },
        seed, false);
    CAPTURE(seed);
    CHECK(g.input_error < 1e-4);
    CHECK(g.param_error < 1e-4);
  }
}

TEST_CASE("dense 2x2 with mse matches the closed form") {
  LayerStack s;
  Dense& d = s.emplace<Dense>(2, 2);
  d.weights() << 1, 2, 3, 4;
  d.bias() << 0.5, -0.5;
  Matrix x(1, 2), t(1, 2);
  x << 1, -1;
  t << 0, 1;
  const Matrix y = s.forward_train(x);
  CHECK(y(0, 0) == doctest::Approx(-1.5));
  CHECK(y(0, 1) == doctest::Approx(-2.5));
  const LossResult l = mse(y, t);
  CHECK(l.value == doctest::Approx(7.25));
  const Matrix dx = s.backward(l.grad);
  CHECK(dx(0, 0) == doctest::Approx(-8.5));
  CHECK(dx(0, 1) == doctest::Approx(-18.5));
  const Matrix& gw = s.layer(0).params()[0].grad;
  CHECK(gw(0, 0) == doctest::Approx(-1.5));
  CHECK(gw(0, 1) == doctest::Approx(-3.5));
  CHECK(gw(1, 0) == doctest::Approx(1.5));
  CHECK(gw(1, 1) == doctest::Approx(3.5));
  const Matrix& gb = s.layer(0).params()[1].grad;
  CHECK(gb(0, 0) == doctest::Approx(-1.5));
  CHECK(gb(0, 1) == doctest::Approx(-3.5));
}

TEST_CASE("forward behaviour") {
  SUBCASE("identity dense") {
    LayerStack s;
    Dense& d = s.emplace<Dense>(4, 4);
    d.weights() = Matrix::Identity(4, 4);
    d.bias().setZero();
    Rng rng(1);
    const Matrix x = random_matrix(rng, 3, 4);
    CHECK(bits_equal(s.forward(x), x));
  }
  SUBCASE("relu of negatives") {
    const Relu r(Shape3{5, 1, 1});
    Matrix x = Matrix::Constant(2, 5, -0.3);
    CHECK(r.forward(x).isZero(0.0));
  }
  SUBCASE("softmax rows sum to one") {
    const Softmax sm(6);
    Rng rng(2);
    const Matrix p = sm.forward(random_matrix(rng, 10, 6, -50, 50));
    for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-9);
  }
  SUBCASE("identity conv kernel reproduces a single channel") {
    Conv2d conv(1, 1, 5, 7);
    conv.weights().setZero();
    conv.weights()(0, 4) = 1.0;  // centre tap
    conv.bias().setZero();
    Rng rng(3);
    const Matrix x = random_matrix(rng, 2, 35);
    CHECK(bits_equal(conv.forward(x), x));
  }
  SUBCASE("max pool picks window maxima and drops odd edges") {
    const MaxPool2d pool(1, 3, 5);
    Matrix x(1, 15);
    for (int i = 0; i < 15; ++i) x(0, i) = i;
    const Matrix y = pool.forward(x);
    REQUIRE(y.cols() == 2);
    CHECK(y(0, 0) == 6);
    CHECK(y(0, 1) == 8);
  }
  SUBCASE("shape mismatch") {
    const LayerStack s = make_mlp({3, 4, 2}, Activation::kRelu, Activation::kNone);
    try {
      s.forward(Matrix::Zero(1, 5));
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kShapeMismatch);
    }
    LayerStack bad;
    bad.emplace<Dense>(3, 4);
    CHECK_THROWS_AS(bad.emplace<Dense>(5, 2), Error);
  }
  SUBCASE("backward without cached activations") {
    LayerStack s = make_mlp({3, 4, 2}, Activation::kRelu, Activation::kNone);
    s.forward(Matrix::Zero(1, 3));  // inference caches nothing
    try {
      s.backward(Matrix::Zero(1, 2));
      FAIL("expected NoCachedActivations");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoCachedActivations);
    }
  }
}

TEST_CASE("losses") {
  Matrix a(1, 1), b(1, 1);
  a << 0.5;
  b << 0.795875;
  CHECK(mse(a, b).value == doctest::Approx(0.087542).epsilon(1e-5));
  CHECK(mse(b, b).value == 0.0);
  CHECK(mse(Matrix::Constant(1, 5, 2.0), Matrix::Constant(1, 5, 1.0)).value == doctest::Approx(1.0));

  Matrix p(1, 1), y(1, 1);
  p << 0.5;
  y << 1.0;
  CHECK(bce(p, y).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  p << 1.0;
  CHECK(bce(p, y).value < 1e-6);
  CHECK(std::isfinite(bce(Matrix::Zero(1, 1), y).value));

  Matrix onehot = Matrix::Zero(2, 3);
  onehot(0, 1) = 1;
  onehot(1, 2) = 1;
  CHECK(ce(onehot, onehot).value < 1e-12);
  Matrix uniform = Matrix::Constant(2, 3, 1.0 / 3.0);
  CHECK(ce(uniform, onehot).value == doctest::Approx(std::log(3.0)));

  // Fused logit gradients equal the chained ones.
  Rng rng(6);
  const Matrix logits = random_matrix(rng, 4, 3, -2, 2);
  const Matrix sig = Sigmoid(Shape3{3, 1, 1}).forward(logits);
  const Matrix tgt = (random_matrix(rng, 4, 3).array() > 0).cast<double>().matrix();
  LayerStack s;
  s.emplace<Sigmoid>(Shape3{3, 1, 1});
  s.forward_train(logits);
  const Matrix chained = s.backward(bce(sig, tgt).grad);
  CHECK(rel_error(chained, bce_logit_grad(sig, tgt)) < 1e-9);

  CHECK_THROWS_AS(mse(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), Error);
  CHECK_THROWS_AS(bce(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), Error);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Param p{Matrix::Constant(2, 2, 0.7), Matrix::Zero(2, 2)};
    Adam adam(0.01);
    for (int i = 0; i < 5; ++i) adam.step({&p});
    CHECK(p.value.isApprox(Matrix::Constant(2, 2, 0.7)));
  }
  SUBCASE("first step is lr * g / (|g| + eps)") {
    Rng rng(12);
    Param p{random_matrix(rng, 3, 4), random_matrix(rng, 3, 4, -5, 5)};
    const Matrix before = p.value;
    const double lr = 1e-3;
    Adam adam(lr);
    adam.step({&p});
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data()[i];
      const double expected = before.data()[i] - lr * g / (std::abs(g) + Adam::kEps);
      CHECK(p.value.data()[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(adam.state().timestep == 1);
  }
  SUBCASE("deterministic") {
    Param a{Matrix::Constant(1, 3, 1.0), Matrix::Constant(1, 3, 0.3)};
    Param b = a;
    Adam x(0.1), y(0.1);
    for (int i = 0; i < 10; ++i) {
      x.step({&a});
      y.step({&b});
    }
    CHECK(bits_equal(a.value, b.value));
  }
}

namespace {

// Validation loss that rises every epoch, with one scalar parameter that
// moves each step.
class WorseningObjective final : public Objective {
 public:
  std::size_t train_size() const override { return 4; }
  double batch_step(std::span<const std::size_t>) override {
    param_.grad(0, 0) = 1.0;
    return 1.0;
  }
  double validation_loss() override { return static_cast<double>(++calls_); }
  std::vector<Param*> trainable_params() override { return {&param_}; }
  Param param_{Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  int calls_ = 0;
};

class NanObjective final : public Objective {
 public:
  std::size_t train_size() const override { return 4; }
  double batch_step(std::span<const std::size_t>) override { return std::nan(""); }
  double validation_loss() override { return 1.0; }
  std::vector<Param*> trainable_params() override { return {&param_}; }
  Param param_{Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
};

}  // namespace

TEST_CASE("training loop") {
  SUBCASE("constant labels are learned") {
    Rng rng(1);
    LayerStack s = make_mlp({4, 16, 2}, Activation::kRelu, Activation::kNone);
    s.init(rng);
    const Matrix x = random_matrix(rng, 64, 4, 0, 1);
    Matrix y(64, 2);
    y.col(0).setConstant(0.3);
    y.col(1).setConstant(0.8);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 16;
    cfg.max_epochs = 200;
    cfg.early_stop_patience = 200;
    train_supervised(s, x, y, x, y, cfg);
    CHECK(mse(s.forward(x), y).value < 1e-4);
  }
  SUBCASE("patience 1 with worsening validation stops after two epochs") {
    WorseningObjective obj;
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.early_stop_patience = 1;
    const TrainHistory h = fit(obj, cfg);
    CHECK(h.epochs.size() == 2);
    CHECK(h.best_epoch == 1);
    CHECK(h.early_stopped);
    // Weights after epoch 1: one Adam step of -lr.
    CHECK(obj.param_.value(0, 0) == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
  }
  SUBCASE("non-finite loss") {
    NanObjective obj;
    try {
      fit(obj, TrainConfig{});
      FAIL("expected Diverged");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDiverged);
    }
  }
  SUBCASE("config validation and defaults") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0005;
    cfg.batch_size = 128;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.early_stop_patience == 50);
    CHECK(cfg.max_epochs == 2000);
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(TrainConfig::from_json(TrainConfig{}.to_json()).to_json() == TrainConfig{}.to_json());
  }
  SUBCASE("history csv") {
    TrainHistory h;
    h.epochs = {{1, 0.5, 0.25}, {2, 0.125, 0.0625}};
    CHECK(h.to_csv() == "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,0.0625\n");
  }
}

namespace {

LayerStack trained_stack(std::uint64_t seed) {
  Rng rng(seed);
  LayerStack s = make_mlp({3, 8, 8, 2}, Activation::kRelu, Activation::kSigmoid);
  s.init(rng);
  const Matrix x = random_matrix(rng, 40, 3);
  const Matrix y = (x.leftCols(2).array() > 0).cast<double>().matrix();
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.max_epochs = 30;
  cfg.seed = seed;
  cfg.loss_kind = LossKind::kBce;
  train_supervised(s, x, y, x, y, cfg);
  return s;
}

}  // namespace

TEST_CASE("determinism and freezing") {
  SUBCASE("same seed, same bytes") {
    ModelDocument a, b;
    a.kind = b.kind = "apt-dnn";
    a.stacks.emplace_back("main", trained_stack(5));
    b.stacks.emplace_back("main", trained_stack(5));
    CHECK(model_to_text(a) == model_to_text(b));
  }
  SUBCASE("fully frozen stack never changes") {
    Rng rng(8);
    LayerStack s = make_mlp({3, 5, 1}, Activation::kRelu, Activation::kNone);
    s.init(rng);
    s.set_frozen(true);
    CHECK(s.all_frozen());
    CHECK(s.trainable_params().empty());
    const std::string before = s.to_json().dump();
    const Matrix x = random_matrix(rng, 20, 3);
    const Matrix y = random_matrix(rng, 20, 1);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.batch_size = 5;
    train_supervised(s, x, y, x, y, cfg);
    CHECK(s.to_json().dump() == before);
  }
  SUBCASE("frozen layer has zero parameter gradients but passes input gradients") {
    Rng rng(9);
    LayerStack s = make_mlp({3, 4, 2}, Activation::kRelu, Activation::kNone);
    s.init(rng);
    s.layer(2).set_frozen(true);
    s.zero_grad();
    s.forward_train(random_matrix(rng, 3, 3));
    const Matrix dx = s.backward(Matrix::Ones(3, 2));
    for (const auto& p : s.layer(2).params()) CHECK(p.grad.isZero(0.0));
    CHECK_FALSE(s.layer(0).params()[0].grad.isZero(0.0));
    CHECK_FALSE(dx.isZero(0.0));
  }
}

TEST_CASE("model files") {
  ModelDocument doc;
  doc.kind = "drag-bin";
  doc.seed = 77;
  doc.stacks.emplace_back("main", trained_stack(3));
  doc.stacks[0].second.layer(0).set_frozen(true);
  doc.metadata["note"] = "x";
  const std::string text = model_to_text(doc);

  SUBCASE("round trip is bit exact") {
    const ModelDocument back = parse_model(text);
    CHECK(model_to_text(back) == text);
    CHECK(back.seed == 77);
    CHECK(back.stack("main").layer(0).frozen());
    CHECK_FALSE(back.stack("main").layer(2).frozen());
    Rng rng(4);
    const Matrix x = random_matrix(rng, 16, 3);
    CHECK(bits_equal(back.stack("main").forward(x), doc.stack("main").forward(x)));
  }
  SUBCASE("file round trip") {
    const std::string path = (std::filesystem::temp_directory_path() / "sealid-neural-model.json").string();
    save_model(doc, path);
    CHECK(model_to_text(load_model(path)) == text);
  }
  SUBCASE("truncated text") {
    try {
      parse_model(text.substr(0, text.size() / 2));
      FAIL("expected SchemaMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSchemaMismatch);
    }
  }
  SUBCASE("weights of the wrong length") {
    auto j = nlohmann::ordered_json::parse(text);
    j["stacks"]["main"]["layers"][0]["weights"].erase(0);
    try {
      model_from_json(j);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kShapeMismatch);
    }
  }
  SUBCASE("schema version") {
    auto j = nlohmann::ordered_json::parse(text);
    CHECK(j["schema_version"] == kModelSchemaVersion);
    j["schema_version"] = 99;
    CHECK_THROWS_AS(model_from_json(j), Error);
  }
}
