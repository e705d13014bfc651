#ifndef SEALID_DATASET_H_
#define SEALID_DATASET_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sealid/geometry.h"
#include "sealid/matrix.h"
#include "sealid/oracle.h"

namespace sealid {

struct NormColumn {
  double min = 0.0;
  double max = 1.0;
};

// Per-column min-max scaling, v' = (v - min) / (max - min). Values outside
// [min, max] map outside [0, 1]; nothing is clipped.
class NormSpec {
 public:
  NormSpec() = default;
  // Throws Error(kDegenerateColumn) if any column has min == max.
  NormSpec(std::string source, std::vector<NormColumn> columns);

  static NormSpec from_bounds();
  // Column extrema of `values` (one sample per row).
  static NormSpec from_extrema(const Matrix& values, std::string source);

  std::size_t size() const { return columns_.size(); }
  const std::vector<NormColumn>& columns() const { return columns_; }
  const std::string& source() const { return source_; }

  double normalize(std::size_t col, double v) const;
  double denormalize(std::size_t col, double v) const;
  Matrix normalize(const Matrix& values) const;
  Matrix denormalize(const Matrix& values) const;

  nlohmann::ordered_json to_json() const;
  static NormSpec from_json(const nlohmann::ordered_json& j);

  bool operator==(const NormSpec& other) const;

 private:
  std::string source_;
  std::vector<NormColumn> columns_;
};

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// Bucket sizes for n rows: train = floor(n*r0/R), test = round(n*r2/R),
// val takes the remainder, handing one row to train if it would exceed its
// exact share by more than one (820 -> 574/164/82, 1691 -> 1183/339/169).
SplitCounts split_counts(std::size_t n, std::array<unsigned, 3> ratios = {7, 2, 1});

// Seeded shuffle, then contiguous cut into train/val/test. tags[i] is the
// bucket of input row i. Throws Error(kTooFewRows) below 10 rows.
std::vector<Split> split(std::size_t n_rows, std::uint64_t seed,
                         std::array<unsigned, 3> ratios = {7, 2, 1});

inline constexpr std::size_t kNumOnsetClasses = 7;
using OneHot = std::array<double, kNumOnsetClasses>;

// Throws Error(kUnknownClass) unless onset is one of 30, 40, ..., 90.
OneHot one_hot(int onset_bar);
int onset_index(int onset_bar);
int argmax_decode(std::span<const double> scores);

enum class DatasetTask { kApt, kDragBinary, kDragMulticlass };

std::string_view dataset_task_name(DatasetTask t);

struct DataRow {
  std::size_t id = 0;
  DesignVector x{};
  oracle::Apt apt{};
  oracle::DragLabel drag;
  Split split = Split::kTrain;
};

struct DatasetMeta {
  std::uint64_t seed = 0;
  std::string oracle_version{oracle::kVersion};
  std::size_t n_requested = 0;
  std::size_t n_dropped = 0;
};

struct LabeledDataset {
  DatasetTask task = DatasetTask::kApt;
  std::vector<DataRow> rows;
  NormSpec x_norm;                 // bounds table
  std::optional<NormSpec> y_norm;  // APT label columns, training rows only
  DatasetMeta meta;

  std::size_t count(Split s) const;
  std::vector<const DataRow*> select(Split s) const;

  // Normalized inputs u, one row per sample.
  Matrix inputs(Split s) const;
  // APT labels, normalized with y_norm when `normalized`.
  Matrix apt_labels(Split s, bool normalized = true) const;
  // Column of 0/1 drag flags.
  Matrix drag_labels(Split s) const;
  // One-hot onset rows (amplified rows only, so use on multiclass views).
  Matrix onset_labels(Split s) const;
};

// Splits and fits normalization on the training partition.
LabeledDataset build_dataset(const RawDataset& raw, std::uint64_t split_seed);

// Amplified rows only, keeping their split tags.
LabeledDataset multiclass_view(const LabeledDataset& drag);

// `csv_path` gets the rows; the sidecar goes next to it with a .json suffix
// in place of .csv.
std::string sidecar_path(const std::string& csv_path);
void save_dataset(const LabeledDataset& ds, const std::string& csv_path);
// Throws kSchemaMismatch, kCorruptRow or kDegenerateColumn.
LabeledDataset load_dataset(const std::string& csv_path);

// Text forms used by save/load, exposed for tests.
std::string dataset_csv(const LabeledDataset& ds);
nlohmann::ordered_json dataset_sidecar(const LabeledDataset& ds, std::string_view csv_text);
LabeledDataset parse_dataset(std::string_view csv_text, const nlohmann::ordered_json& sidecar);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace sealid

#endif  // SEALID_DATASET_H_
