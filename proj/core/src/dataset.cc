#include "sealid/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "sealid/csv.h"
#include "sealid/error.h"
#include "sealid/rng.h"

namespace sealid {

namespace {
constexpr int kSchemaVersion = 1;
}  // namespace

// ---------------------------------------------------------------- NormSpec

NormSpec::NormSpec(std::string source, std::vector<NormColumn> columns)
    : source_(std::move(source)), columns_(std::move(columns)) {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (!(columns_[i].min < columns_[i].max)) {
      throw Error(ErrorCode::kDegenerateColumn,
                  "column " + std::to_string(i) + " has min >= max");
    }
  }
}

NormSpec NormSpec::from_bounds() {
  std::vector<NormColumn> cols;
  for (const auto& v : kDesignVariables) cols.push_back({v.lo, v.hi});
  return NormSpec(std::string(kBoundsId), std::move(cols));
}

NormSpec NormSpec::from_extrema(const Matrix& values, std::string source) {
  if (values.rows() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "cannot fit normalization on zero rows");
  }
  std::vector<NormColumn> cols;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    cols.push_back({values.col(c).minCoeff(), values.col(c).maxCoeff()});
  }
  return NormSpec(std::move(source), std::move(cols));
}

double NormSpec::normalize(std::size_t col, double v) const {
  const auto& c = columns_.at(col);
  return (v - c.min) / (c.max - c.min);
}

double NormSpec::denormalize(std::size_t col, double v) const {
  const auto& c = columns_.at(col);
  return c.min + v * (c.max - c.min);
}

Matrix NormSpec::normalize(const Matrix& values) const {
  if (static_cast<std::size_t>(values.cols()) != columns_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "normalize: column count differs from spec");
  }
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out(r, c) = normalize(static_cast<std::size_t>(c), values(r, c));
    }
  }
  return out;
}

Matrix NormSpec::denormalize(const Matrix& values) const {
  if (static_cast<std::size_t>(values.cols()) != columns_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "denormalize: column count differs from spec");
  }
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out(r, c) = denormalize(static_cast<std::size_t>(c), values(r, c));
    }
  }
  return out;
}

nlohmann::ordered_json NormSpec::to_json() const {
  nlohmann::ordered_json j;
  j["source"] = source_;
  std::vector<double> mins, maxs;
  for (const auto& c : columns_) {
    mins.push_back(c.min);
    maxs.push_back(c.max);
  }
  j["min"] = mins;
  j["max"] = maxs;
  return j;
}

NormSpec NormSpec::from_json(const nlohmann::ordered_json& j) {
  try {
    const auto mins = j.at("min").get<std::vector<double>>();
    const auto maxs = j.at("max").get<std::vector<double>>();
    if (mins.size() != maxs.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "norm_spec min/max lengths differ");
    }
    std::vector<NormColumn> cols;
    for (std::size_t i = 0; i < mins.size(); ++i) cols.push_back({mins[i], maxs[i]});
    return NormSpec(j.at("source").get<std::string>(), std::move(cols));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("norm_spec: ") + e.what());
  }
}

bool NormSpec::operator==(const NormSpec& other) const {
  if (source_ != other.source_ || columns_.size() != other.columns_.size()) return false;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].min != other.columns_[i].min ||
        columns_[i].max != other.columns_[i].max) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- splits

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw Error(ErrorCode::kCorruptRow, "unknown split tag '" + std::string(s) + "'");
}

SplitCounts split_counts(std::size_t n, std::array<unsigned, 3> ratios) {
  const std::size_t total = ratios[0] + ratios[1] + ratios[2];
  if (total == 0) throw Error(ErrorCode::kInvalidArgument, "split ratios sum to zero");
  SplitCounts c;
  c.train = n * ratios[0] / total;
  c.test = (2 * n * ratios[2] + total) / (2 * total);
  c.val = n - c.train - c.test;
  // Keep every bucket within one row of its exact share.
  if (static_cast<double>(c.val) - static_cast<double>(n) * ratios[1] / total > 1.0) {
    --c.val;
    ++c.train;
  }
  return c;
}

std::vector<Split> split(std::size_t n_rows, std::uint64_t seed,
                         std::array<unsigned, 3> ratios) {
  if (n_rows < 10) {
    throw Error(ErrorCode::kTooFewRows,
                "need at least 10 rows to split, got " + std::to_string(n_rows));
  }
  const SplitCounts counts = split_counts(n_rows, ratios);
  Rng rng(seed);
  const auto order = rng.permutation(n_rows);
  std::vector<Split> tags(n_rows);
  for (std::size_t k = 0; k < n_rows; ++k) {
    Split s = Split::kTest;
    if (k < counts.train) {
      s = Split::kTrain;
    } else if (k < counts.train + counts.val) {
      s = Split::kVal;
    }
    tags[order[k]] = s;
  }
  return tags;
}

// ---------------------------------------------------------------- one-hot

int onset_index(int onset_bar) {
  if (onset_bar < 30 || onset_bar > 90 || onset_bar % 10 != 0) {
    throw Error(ErrorCode::kUnknownClass,
                "onset " + std::to_string(onset_bar) + " is not one of 30..90 bar");
  }
  return (onset_bar - 30) / 10;
}

OneHot one_hot(int onset_bar) {
  OneHot h{};
  h[static_cast<std::size_t>(onset_index(onset_bar))] = 1.0;
  return h;
}

int argmax_decode(std::span<const double> scores) {
  if (scores.size() != kNumOnsetClasses) {
    throw Error(ErrorCode::kShapeMismatch, "argmax_decode expects 7 scores");
  }
  const auto it = std::max_element(scores.begin(), scores.end());
  return 30 + 10 * static_cast<int>(it - scores.begin());
}

// ---------------------------------------------------------------- dataset

std::string_view dataset_task_name(DatasetTask t) {
  switch (t) {
    case DatasetTask::kApt: return "apt";
    case DatasetTask::kDragBinary: return "drag-binary";
    case DatasetTask::kDragMulticlass: return "drag-multiclass";
  }
  return "?";
}

namespace {

DatasetTask parse_task(std::string_view s) {
  if (s == "apt") return DatasetTask::kApt;
  if (s == "drag-binary") return DatasetTask::kDragBinary;
  if (s == "drag-multiclass") return DatasetTask::kDragMulticlass;
  throw Error(ErrorCode::kSchemaMismatch, "unknown task '" + std::string(s) + "'");
}

Matrix apt_matrix(const std::vector<const DataRow*>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < 3; ++k) m(static_cast<Eigen::Index>(r), k) = rows[r]->apt[k];
  }
  return m;
}

}  // namespace

std::size_t LabeledDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [s](const DataRow& r) { return r.split == s; }));
}

std::vector<const DataRow*> LabeledDataset::select(Split s) const {
  std::vector<const DataRow*> out;
  for (const auto& r : rows) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

Matrix LabeledDataset::inputs(Split s) const {
  const auto sel = select(s);
  Matrix m(static_cast<Eigen::Index>(sel.size()), static_cast<Eigen::Index>(kNumDesignVars));
  for (std::size_t r = 0; r < sel.size(); ++r) {
    for (std::size_t c = 0; c < kNumDesignVars; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          x_norm.normalize(c, sel[r]->x[c]);
    }
  }
  return m;
}

Matrix LabeledDataset::apt_labels(Split s, bool normalized) const {
  if (task != DatasetTask::kApt) {
    throw Error(ErrorCode::kSchemaMismatch, "apt labels requested from a drag dataset");
  }
  Matrix m = apt_matrix(select(s));
  if (!normalized) return m;
  if (!y_norm) throw Error(ErrorCode::kMissingNormSpec, "dataset has no label norm_spec");
  return y_norm->normalize(m);
}

Matrix LabeledDataset::drag_labels(Split s) const {
  const auto sel = select(s);
  Matrix m(static_cast<Eigen::Index>(sel.size()), 1);
  for (std::size_t r = 0; r < sel.size(); ++r) {
    m(static_cast<Eigen::Index>(r), 0) = sel[r]->drag.amplified ? 1.0 : 0.0;
  }
  return m;
}

Matrix LabeledDataset::onset_labels(Split s) const {
  const auto sel = select(s);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(sel.size()),
                          static_cast<Eigen::Index>(kNumOnsetClasses));
  for (std::size_t r = 0; r < sel.size(); ++r) {
    if (!sel[r]->drag.onset_bar) {
      throw Error(ErrorCode::kUnknownClass, "row without onset class in multiclass data");
    }
    m(static_cast<Eigen::Index>(r), onset_index(*sel[r]->drag.onset_bar)) = 1.0;
  }
  return m;
}

LabeledDataset build_dataset(const RawDataset& raw, std::uint64_t split_seed) {
  LabeledDataset ds;
  ds.task = raw.task == Task::kApt ? DatasetTask::kApt : DatasetTask::kDragBinary;
  ds.x_norm = NormSpec::from_bounds();
  ds.meta.seed = raw.provenance.seed;
  ds.meta.oracle_version = std::string(raw.provenance.oracle_version);
  ds.meta.n_requested = raw.provenance.n_requested;
  ds.meta.n_dropped = raw.provenance.n_dropped;
  const auto tags = split(raw.rows.size(), split_seed);
  ds.rows.reserve(raw.rows.size());
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    DataRow row;
    row.id = i;
    row.x = raw.rows[i].x;
    row.apt = raw.rows[i].apt;
    row.drag = raw.rows[i].drag;
    row.split = tags[i];
    ds.rows.push_back(row);
  }
  if (ds.task == DatasetTask::kApt) {
    ds.y_norm = NormSpec::from_extrema(apt_matrix(ds.select(Split::kTrain)), "train-extrema");
  }
  return ds;
}

LabeledDataset multiclass_view(const LabeledDataset& drag) {
  if (drag.task == DatasetTask::kApt) {
    throw Error(ErrorCode::kSchemaMismatch, "multiclass view needs a drag dataset");
  }
  LabeledDataset out;
  out.task = DatasetTask::kDragMulticlass;
  out.x_norm = drag.x_norm;
  out.meta = drag.meta;
  for (const auto& r : drag.rows) {
    if (r.drag.amplified) out.rows.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- files

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::vector<std::string> header_for(DatasetTask task) {
  std::vector<std::string> h{"id"};
  for (const auto& v : kDesignVariables) h.emplace_back(v.name);
  if (task == DatasetTask::kApt) {
    h.insert(h.end(), {"apt1", "apt2", "apt3"});
  } else {
    h.insert(h.end(), {"drag", "onset"});
  }
  h.emplace_back("split");
  return h;
}

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto res = std::from_chars(field.data(), end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::kCorruptRow,
                "line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

std::string dataset_csv(const LabeledDataset& ds) {
  std::string out = csv::join_row(header_for(ds.task));
  for (const auto& r : ds.rows) {
    std::vector<std::string> f{std::to_string(r.id)};
    for (double v : r.x) f.push_back(csv::format_double(v));
    if (ds.task == DatasetTask::kApt) {
      for (double v : r.apt) f.push_back(csv::format_double(v));
    } else {
      f.push_back(r.drag.amplified ? "1" : "0");
      f.push_back(r.drag.onset_bar ? std::to_string(*r.drag.onset_bar) : "");
    }
    f.emplace_back(split_name(r.split));
    out += csv::join_row(f);
  }
  return out;
}

nlohmann::ordered_json dataset_sidecar(const LabeledDataset& ds, std::string_view csv_text) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["task"] = dataset_task_name(ds.task);
  j["oracle_version"] = ds.meta.oracle_version;
  j["seed"] = ds.meta.seed;
  j["counts"] = {{"requested", ds.meta.n_requested},
                 {"kept", ds.rows.size()},
                 {"dropped", ds.meta.n_dropped},
                 {"train", ds.count(Split::kTrain)},
                 {"val", ds.count(Split::kVal)},
                 {"test", ds.count(Split::kTest)}};
  j["row_count"] = ds.rows.size();
  j["csv_fnv1a64"] = hex64(fnv1a64(csv_text));
  j["norm_spec"]["x"] = ds.x_norm.to_json();
  j["norm_spec"]["y"] = ds.y_norm ? ds.y_norm->to_json() : nlohmann::ordered_json(nullptr);
  return j;
}

LabeledDataset parse_dataset(std::string_view csv_text, const nlohmann::ordered_json& sidecar) {
  LabeledDataset ds;
  std::size_t expected_rows = 0;
  std::string checksum;
  try {
    if (sidecar.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::kSchemaMismatch, "unsupported sidecar schema_version");
    }
    ds.task = parse_task(sidecar.at("task").get<std::string>());
    ds.meta.oracle_version = sidecar.at("oracle_version").get<std::string>();
    ds.meta.seed = sidecar.at("seed").get<std::uint64_t>();
    ds.meta.n_requested = sidecar.at("counts").at("requested").get<std::size_t>();
    ds.meta.n_dropped = sidecar.at("counts").at("dropped").get<std::size_t>();
    expected_rows = sidecar.at("row_count").get<std::size_t>();
    checksum = sidecar.at("csv_fnv1a64").get<std::string>();
    ds.x_norm = NormSpec::from_json(sidecar.at("norm_spec").at("x"));
    const auto& y = sidecar.at("norm_spec").at("y");
    if (!y.is_null()) ds.y_norm = NormSpec::from_json(y);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("sidecar: ") + e.what());
  }
  if (ds.x_norm.size() != kNumDesignVars) {
    throw Error(ErrorCode::kSchemaMismatch, "x norm_spec must have 13 columns");
  }
  if (ds.task == DatasetTask::kApt && (!ds.y_norm || ds.y_norm->size() != 3)) {
    throw Error(ErrorCode::kSchemaMismatch, "apt dataset needs a 3-column label norm_spec");
  }

  const auto records = csv::parse(csv_text);
  const auto header = header_for(ds.task);
  if (records.empty() || records[0] != header) {
    throw Error(ErrorCode::kSchemaMismatch,
                "CSV header does not match the " + std::string(dataset_task_name(ds.task)) +
                    " schema");
  }
  for (std::size_t line = 1; line < records.size(); ++line) {
    const auto& f = records[line];
    if (f.size() != header.size()) {
      throw Error(ErrorCode::kCorruptRow, "line " + std::to_string(line + 1) + ": expected " +
                                              std::to_string(header.size()) + " fields");
    }
    DataRow r;
    r.id = static_cast<std::size_t>(parse_number(f[0], line + 1));
    for (std::size_t i = 0; i < kNumDesignVars; ++i) r.x[i] = parse_number(f[1 + i], line + 1);
    std::size_t k = 1 + kNumDesignVars;
    if (ds.task == DatasetTask::kApt) {
      for (int a = 0; a < 3; ++a) r.apt[a] = parse_number(f[k++], line + 1);
    } else {
      const std::string& flag = f[k++];
      if (flag != "0" && flag != "1") {
        throw Error(ErrorCode::kCorruptRow, "line " + std::to_string(line + 1) + ": bad drag flag");
      }
      r.drag.amplified = flag == "1";
      const std::string& onset = f[k++];
      if (!onset.empty()) {
        const int bar = static_cast<int>(parse_number(onset, line + 1));
        onset_index(bar);
        r.drag.onset_bar = bar;
      }
      if (r.drag.amplified != r.drag.onset_bar.has_value()) {
        throw Error(ErrorCode::kCorruptRow,
                    "line " + std::to_string(line + 1) + ": onset present iff amplified");
      }
      if (ds.task == DatasetTask::kDragMulticlass && !r.drag.amplified) {
        throw Error(ErrorCode::kCorruptRow, "multiclass dataset contains a drag-free row");
      }
    }
    r.split = parse_split(f[k]);
    const auto violations = validate(r.x);
    if (!violations.empty()) {
      throw Error(ErrorCode::kCorruptRow, "line " + std::to_string(line + 1) + ": " +
                                              violations.front().message);
    }
    ds.rows.push_back(r);
  }
  if (ds.rows.size() != expected_rows) {
    throw Error(ErrorCode::kCorruptRow, "row count " + std::to_string(ds.rows.size()) +
                                            " differs from sidecar " +
                                            std::to_string(expected_rows));
  }
  if (hex64(fnv1a64(csv_text)) != checksum) {
    throw Error(ErrorCode::kCorruptRow, "CSV checksum differs from sidecar");
  }
  if (ds.task != DatasetTask::kDragMulticlass && ds.rows.size() >= 10) {
    const SplitCounts want = split_counts(ds.rows.size());
    auto off = [](std::size_t got, std::size_t exp) {
      return got + 1 < exp || got > exp + 1;
    };
    if (off(ds.count(Split::kTrain), want.train) || off(ds.count(Split::kVal), want.val) ||
        off(ds.count(Split::kTest), want.test)) {
      throw Error(ErrorCode::kCorruptRow, "split proportions are not 7:2:1");
    }
  }
  return ds;
}

std::string sidecar_path(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() > ext.size() &&
      csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0) {
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".json";
  }
  return csv_path + ".json";
}

void save_dataset(const LabeledDataset& ds, const std::string& csv_path) {
  const std::string text = dataset_csv(ds);
  csv::write_file(csv_path, text);
  csv::write_file(sidecar_path(csv_path), dataset_sidecar(ds, text).dump(2) + "\n");
}

LabeledDataset load_dataset(const std::string& csv_path) {
  const std::string text = csv::read_file(csv_path);
  const std::string side = csv::read_file(sidecar_path(csv_path));
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("sidecar is not JSON: ") + e.what());
  }
  return parse_dataset(text, j);
}

}  // namespace sealid
