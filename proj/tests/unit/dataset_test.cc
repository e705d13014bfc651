#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "sealid/csv.h"
#include "sealid/dataset.h"
#include "sealid/error.h"
#include "test_util.h"

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

const LabeledDataset& small_apt() {
  static const LabeledDataset ds = build_dataset(generate_labeled({120, 9}, Task::kApt), 10);
  return ds;
}

const LabeledDataset& small_drag() {
  static const LabeledDataset ds = build_dataset(generate_labeled({300, 9}, Task::kDrag), 10);
  return ds;
}

}  // namespace

TEST_CASE("min-max normalization") {
  const NormSpec spec("test", {{1.0, 3.0}, {-2.0, 2.0}});
  CHECK(spec.normalize(0, 1.0) == 0.0);
  CHECK(spec.normalize(0, 3.0) == 1.0);
  CHECK(spec.normalize(1, 0.0) == 0.5);
  // Out-of-range values pass through unclipped.
  CHECK(spec.normalize(0, 5.0) == doctest::Approx(2.0));
  CHECK(spec.normalize(0, -1.0) == doctest::Approx(-1.0));

  Rng rng(4);
  Matrix v(50, 2);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-10, 10);
  const Matrix back = spec.denormalize(spec.normalize(v));
  CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12 * 10);

  CHECK(code_of([] { NormSpec("bad", {{1.0, 1.0}}); }) == ErrorCode::kDegenerateColumn);
  CHECK(NormSpec::from_json(spec.to_json()) == spec);
}

TEST_CASE("label scaling uses training extrema only") {
  const LabeledDataset& ds = small_apt();
  REQUIRE(ds.y_norm.has_value());
  const Matrix train = ds.apt_labels(Split::kTrain, false);
  for (int c = 0; c < 3; ++c) {
    CHECK(ds.y_norm->columns()[c].min == train.col(c).minCoeff());
    CHECK(ds.y_norm->columns()[c].max == train.col(c).maxCoeff());
  }
  const Matrix train_n = ds.apt_labels(Split::kTrain);
  CHECK(train_n.minCoeff() == doctest::Approx(0.0));
  CHECK(train_n.maxCoeff() == doctest::Approx(1.0));

  // A value beyond the training range keeps its position outside [0, 1].
  const double above = ds.y_norm->columns()[2].max + 0.5;
  const double mapped = ds.y_norm->normalize(2, above);
  CHECK(mapped > 1.0);
  CHECK(ds.y_norm->denormalize(2, mapped) == doctest::Approx(above));

  // Inputs are scaled by the bounds table, not the data.
  CHECK(ds.x_norm == NormSpec::from_bounds());
}

TEST_CASE("split sizes follow 7:2:1") {
  auto check = [](std::size_t n, std::size_t tr, std::size_t va, std::size_t te) {
    const SplitCounts c = split_counts(n);
    CHECK(c.train == tr);
    CHECK(c.val == va);
    CHECK(c.test == te);
    const auto tags = split(n, 1);
    CHECK(static_cast<std::size_t>(std::count(tags.begin(), tags.end(), Split::kTrain)) == tr);
    CHECK(static_cast<std::size_t>(std::count(tags.begin(), tags.end(), Split::kVal)) == va);
    CHECK(static_cast<std::size_t>(std::count(tags.begin(), tags.end(), Split::kTest)) == te);
  };
  check(820, 574, 164, 82);
  check(1691, 1183, 339, 169);
  check(10, 7, 2, 1);
  for (std::size_t n = 10; n < 400; ++n) {
    const SplitCounts c = split_counts(n);
    CHECK(c.train + c.val + c.test == n);
    CHECK(std::abs(static_cast<double>(c.train) - 0.7 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(c.val) - 0.2 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(c.test) - 0.1 * n) <= 1.0);
  }
  CHECK(code_of([] { split(9, 1); }) == ErrorCode::kTooFewRows);
}

TEST_CASE("split determinism") {
  CHECK(split(200, 42) == split(200, 42));
  CHECK(split(200, 42) != split(200, 43));
}

TEST_CASE("one-hot onset classes") {
  CHECK(one_hot(30) == OneHot{1, 0, 0, 0, 0, 0, 0});
  CHECK(one_hot(90) == OneHot{0, 0, 0, 0, 0, 0, 1});
  for (int k = 30; k <= 90; k += 10) {
    const OneHot h = one_hot(k);
    CHECK(std::count(h.begin(), h.end(), 1.0) == 1);
    CHECK(argmax_decode(h) == k);
  }
  for (int bad : {20, 35, 100, 0}) {
    CHECK(code_of([bad] { one_hot(bad); }) == ErrorCode::kUnknownClass);
  }
  const double scores[7] = {0.1, 0.05, 0.3, 0.2, 0.1, 0.15, 0.1};
  CHECK(argmax_decode(scores) == 50);
}

TEST_CASE("built datasets satisfy the invariants") {
  const LabeledDataset& ds = small_apt();
  const SplitCounts want = split_counts(ds.rows.size());
  CHECK(ds.count(Split::kTrain) == want.train);
  CHECK(ds.count(Split::kVal) == want.val);
  CHECK(ds.count(Split::kTest) == want.test);
  for (const auto& r : ds.rows) CHECK(is_valid(r.x));
  CHECK(ds.inputs(Split::kTrain).rows() == static_cast<Eigen::Index>(want.train));
  CHECK(ds.inputs(Split::kTrain).cols() == 13);

  const LabeledDataset& drag = small_drag();
  const Matrix flags = drag.drag_labels(Split::kTrain);
  CHECK(flags.cols() == 1);
  CHECK(((flags.array() == 0.0) || (flags.array() == 1.0)).all());
  CHECK_FALSE(drag.y_norm.has_value());

  const LabeledDataset multi = multiclass_view(drag);
  CHECK(multi.task == DatasetTask::kDragMulticlass);
  for (const auto& r : multi.rows) CHECK(r.drag.amplified);
  const Matrix onehot = multi.onset_labels(Split::kTrain);
  CHECK(onehot.cols() == 7);
  for (Eigen::Index i = 0; i < onehot.rows(); ++i) CHECK(onehot.row(i).sum() == 1.0);
}

TEST_CASE("save and load round trip") {
  const auto dir = sealid::testing::scratch_dir("dataset");
  for (const LabeledDataset* ds : {&small_apt(), &small_drag()}) {
    const std::string path = (dir / (std::string(dataset_task_name(ds->task)) + ".csv")).string();
    save_dataset(*ds, path);
    CHECK(std::filesystem::exists(sidecar_path(path)));
    const LabeledDataset back = load_dataset(path);
    CHECK(back.task == ds->task);
    REQUIRE(back.rows.size() == ds->rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
      CHECK(back.rows[i].id == ds->rows[i].id);
      CHECK(back.rows[i].x == ds->rows[i].x);
      CHECK(back.rows[i].apt == ds->rows[i].apt);
      CHECK(back.rows[i].drag.amplified == ds->rows[i].drag.amplified);
      CHECK(back.rows[i].drag.onset_bar == ds->rows[i].drag.onset_bar);
      CHECK(back.rows[i].split == ds->rows[i].split);
    }
    CHECK(back.x_norm == ds->x_norm);
    CHECK(back.y_norm == ds->y_norm);
    CHECK(back.meta.seed == ds->meta.seed);
    // Saving the loaded copy reproduces the bytes.
    CHECK(dataset_csv(back) == dataset_csv(*ds));
  }
  const auto sidecar = nlohmann::ordered_json::parse(csv::read_file(sidecar_path((dir / "apt.csv").string())));
  CHECK(sidecar.contains("schema_version"));
  CHECK(sidecar.at("oracle_version") == oracle::kVersion);
}

TEST_CASE("corrupt files are rejected") {
  const LabeledDataset& ds = small_apt();
  const std::string text = dataset_csv(ds);
  const auto sidecar = dataset_sidecar(ds, text);

  SUBCASE("twelve design columns") {
    std::string bad = text;
    const auto pos = bad.find(",x13");
    bad.erase(pos, 4);
    CHECK(code_of([&] { parse_dataset(bad, sidecar); }) == ErrorCode::kSchemaMismatch);
  }
  SUBCASE("degenerate norm_spec column") {
    auto side = sidecar;
    side["norm_spec"]["y"]["max"][1] = side["norm_spec"]["y"]["min"][1];
    CHECK(code_of([&] { parse_dataset(text, side); }) == ErrorCode::kDegenerateColumn);
  }
  SUBCASE("unparsable number") {
    std::string bad = text;
    const auto line2 = bad.find('\n') + 1;
    const auto comma = bad.find(',', line2);
    bad.insert(comma + 1, "abc");
    CHECK(code_of([&] { parse_dataset(bad, sidecar); }) == ErrorCode::kCorruptRow);
  }
  SUBCASE("row count differs from the sidecar") {
    std::string bad = text;
    bad.erase(bad.rfind('\n', bad.size() - 2) + 1);
    CHECK(code_of([&] { parse_dataset(bad, sidecar); }) == ErrorCode::kCorruptRow);
  }
  SUBCASE("edited value fails the checksum") {
    std::string bad = text;
    const auto line2 = bad.find('\n') + 1;
    const auto first = bad.find(',', line2) + 1;
    bad.insert(first, "0");  // x1 gains a leading zero: same number, new bytes
    CHECK(code_of([&] { parse_dataset(bad, sidecar); }) == ErrorCode::kCorruptRow);
  }
  SUBCASE("invalid geometry in a row") {
    std::string bad = text;
    const auto line2 = bad.find('\n') + 1;
    const auto first = bad.find(',', line2) + 1;
    const auto end = bad.find(',', first);
    bad.replace(first, end - first, "9");  // x1 far out of bounds
    CHECK(code_of([&] { parse_dataset(bad, sidecar); }) == ErrorCode::kCorruptRow);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/sealid/apt.csv"), Error);
  }
}
