#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "doctest.h"
#include "sealid/baseline.h"
#include "sealid/error.h"

using namespace sealid;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no Error thrown");
  return ErrorCode::kInvalidArgument;
}

// Single dense layer 13 -> outputs with fixed random weights.
nn::LayerStack linear_stack(int outputs, std::uint64_t seed) {
  nn::LayerStack s;
  auto& d = s.emplace<nn::Dense>(13, outputs);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < d.weights().size(); ++i) d.weights().data()[i] = rng.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < d.bias().size(); ++i) d.bias().data()[i] = rng.uniform(-0.5, 0.5);
  return s;
}

const nn::Dense& dense0(const nn::LayerStack& s) { return static_cast<const nn::Dense&>(s.layer(0)); }

RowVector as_row(const std::array<double, 13>& u) {
  RowVector r(13);
  for (int i = 0; i < 13; ++i) r(i) = u[static_cast<std::size_t>(i)];
  return r;
}

// Gradient of mean squared error for the linear map, in input space.
RowVector linear_grad(const nn::LayerStack& s, const RowVector& u, const RowVector& t) {
  const auto& d = dense0(s);
  const RowVector resid = u * d.weights() + d.bias() - t;
  return 2.0 / static_cast<double>(t.size()) * resid * d.weights().transpose();
}

struct Fixture {
  LabeledDataset data;
  ForwardModel apt;
  InverseModel sid;

  Fixture()
      : data(build_dataset(generate_labeled({1000, derive_seed(42, "doe-apt")}, Task::kApt),
                           derive_seed(42, "split-apt"))) {
    nn::TrainConfig cfg = default_apt_config();
    cfg.max_epochs = 40;
    apt = train_apt_dnn(data, cfg);
    sid = build_sid(apt, 3);
    cfg = default_sid_config();
    cfg.max_epochs = 40;
    train_sid(sid, data, cfg);
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

Matrix test_targets(std::size_t n) {
  const Matrix all = fx().data.apt_labels(Split::kTest, false);
  return all.topRows(static_cast<Eigen::Index>(n));
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_methods("sid,backprop,sqp") == std::vector<Method>{Method::kSid, Method::kBackprop, Method::kSqp});
  CHECK(parse_methods("mid") == std::vector<Method>{Method::kMid});
  for (Method m : {Method::kSid, Method::kMid, Method::kBackprop, Method::kSqp}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(code_of([] { parse_methods("sid,,sqp"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_methods(""); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_methods("sid,newton"); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("target tables") {
  Matrix t(2, 3);
  t << 0.8, 2.16, 3.15, 0.7, 2.0, 3.0;
  const std::string text = targets_text(t);
  CHECK(text == "0.8,2.16,3.15\n0.7,2,3\n");
  CHECK(parse_targets(text) == t);
  CHECK(code_of([] { parse_targets("1,2\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_targets("1,x,3\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_targets("1,nan,3\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(parse_targets("1,2\n", 2).cols() == 2);
}

TEST_CASE("overdetermined linear map matches least squares") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const nn::LayerStack net = linear_stack(20, seed);
    const auto& d = dense0(net);
    Rng rng(seed + 100);
    RowVector u_star(13), noise(20);
    for (int i = 0; i < 13; ++i) u_star(i) = rng.uniform(0.3, 0.7);
    for (int i = 0; i < 20; ++i) noise(i) = rng.uniform(-0.01, 0.01);
    const RowVector target = u_star * d.weights() + d.bias() + noise;

    // Unconstrained minimizer by QR; it lies well inside the box.
    const Matrix a = d.weights().transpose();
    const Eigen::VectorXd rhs = (target - d.bias()).transpose();
    const Eigen::VectorXd u_ls = a.colPivHouseholderQr().solve(rhs);
    REQUIRE(u_ls.minCoeff() > 0.0);
    REQUIRE(u_ls.maxCoeff() < 1.0);
    const double best = (u_ls.transpose() * d.weights() + d.bias() - target).squaredNorm() / 20.0;

    const BenchmarkRecord sqp = sqp_optimize(net, target);
    CHECK(sqp.method == Method::kSqp);
    CHECK((as_row(sqp.u) - u_ls.transpose()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(sqp.surrogate_mse == doctest::Approx(best).epsilon(1e-9));

    const BenchmarkRecord bp = backprop_optimize(net, target);
    CHECK(bp.method == Method::kBackprop);
    CHECK(bp.surrogate_mse - best < 1e-6);
  }
}

TEST_CASE("box bounds hold and the projected gradient vanishes") {
  const nn::LayerStack net = linear_stack(3, 9);
  const auto& d = dense0(net);
  RowVector u_star = RowVector::Constant(13, 0.5);
  u_star(0) = 1.6;
  u_star(4) = -0.8;
  u_star(9) = 1.3;
  const RowVector target = u_star * d.weights() + d.bias();
  for (const BenchmarkRecord& rec : {sqp_optimize(net, target), backprop_optimize(net, target)}) {
    CAPTURE(method_name(rec.method));
    const RowVector u = as_row(rec.u);
    CHECK(u.minCoeff() >= 0.0);
    CHECK(u.maxCoeff() <= 1.0);
    const RowVector g = linear_grad(net, u, target);
    for (int i = 0; i < 13; ++i) {
      CAPTURE(i);
      if (u(i) <= 1e-9) {
        CHECK(g(i) >= -1e-4);
      } else if (u(i) >= 1.0 - 1e-9) {
        CHECK(g(i) <= 1e-4);
      } else {
        CHECK(std::abs(g(i)) < 1e-4);
      }
    }
  }
}

TEST_CASE("realizable targets on a trained surrogate") {
  const Fixture& f = fx();
  Rng rng(21);
  for (int k = 0; k < 5; ++k) {
    RowVector u(13);
    for (int i = 0; i < 13; ++i) u(i) = rng.uniform(0.2, 0.8);
    const RowVector target = f.apt.stack.forward(u);
    const BenchmarkRecord bp = backprop_optimize(f.apt.stack, target);
    const BenchmarkRecord sqp = sqp_optimize(f.apt.stack, target);
    CHECK(bp.surrogate_mse < 1e-6);
    CHECK(sqp.surrogate_mse < 1e-4);
    CHECK(bp.iterations > 0);
  }
  CHECK(code_of([&] { sqp_optimize(f.apt.stack, RowVector::Zero(2)); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("benchmark report") {
  const Fixture& f = fx();
  const Matrix targets = test_targets(6);
  const BenchmarkModels models{&f.apt, &f.sid, nullptr};
  const std::vector<Method> methods{Method::kSid, Method::kBackprop, Method::kSqp, Method::kMid};
  const BenchmarkReport rep = run_benchmark(models, targets, methods);

  REQUIRE(rep.methods.size() == 4);
  for (const auto& m : rep.methods) {
    CHECK(m.target_checksum == rep.target_checksum);
    CHECK(m.records.size() == 6);
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      for (int k = 0; k < 3; ++k) CHECK(m.records[i].target_mm[k] == targets(static_cast<Eigen::Index>(i), k));
    }
  }
  const MethodSummary* mid = rep.find(Method::kMid);
  REQUIRE(mid != nullptr);
  CHECK(mid->n_failed == 6);
  CHECK(mid->records[0].status == RecordStatus::kFailed);
  CHECK(mid->records[0].message.find("MethodFailed") != std::string::npos);

  for (Method m : {Method::kSid, Method::kBackprop, Method::kSqp}) {
    const MethodSummary* s = rep.find(m);
    REQUIRE(s != nullptr);
    CHECK(s->n_failed == 0);
    CHECK(std::isfinite(s->mae));
    CHECK(s->median_seconds >= 0.0);
    for (const auto& r : s->records) {
      for (double v : r.u) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(r.oracle_mm == oracle::eval_apt(NormalizedDesign{r.u}));
    }
  }
  CHECK(rep.notes.size() == 4);

  const auto j = rep.to_json();
  CHECK(j.at("target_checksum") == rep.target_checksum);
  CHECK(j.at("notes").size() == 4);
  const std::string csv = rep.to_csv();
  for (const char* name : {"sid", "backprop", "sqp", "mid"}) {
    CAPTURE(name);
    CHECK(csv.find(name) != std::string::npos);
  }
  const std::string svg = rep.to_svg();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  SUBCASE("accuracy numbers repeat exactly") {
    const BenchmarkReport again = run_benchmark(models, targets, {Method::kSid, Method::kBackprop, Method::kSqp});
    for (Method m : {Method::kSid, Method::kBackprop, Method::kSqp}) {
      CHECK(again.find(m)->mae == rep.find(m)->mae);
      CHECK(again.find(m)->records[3].u == rep.find(m)->records[3].u);
    }
  }
  SUBCASE("inputs are checked") {
    CHECK(code_of([&] { run_benchmark({nullptr, &f.sid, nullptr}, targets, methods); }) ==
          ErrorCode::kIncompatibleForward);
    CHECK(code_of([&] { run_benchmark(models, Matrix(0, 3), methods); }) == ErrorCode::kEmptyDataset);
  }
}
