#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace bitbit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A labelled feature matrix. Rows are samples, labels are contiguous class
// ids in [0, num_classes). Values are immutable once handed out.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  // Original label text for each class id, in first-appearance order.
  std::vector<std::string> class_names;

  std::size_t num_samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }

  // Rows selected by `indices`, in that order. Class count and names carry over.
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

// Label column selector for CSV input: a header name or a zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

// Column names from the header row of a CSV file.
std::vector<std::string> read_csv_header(const std::filesystem::path& path);

// Reads a headered, comma-delimited CSV. Every column except the label column
// must parse as a finite real; labels are remapped to 0..c-1 by order of first
// appearance. Throws DataError naming the offending row/column.
Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column);

// Returns one human-readable message per violated Dataset invariant.
std::vector<std::string> validate(const Dataset& d);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = false;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Index-level split: a seeded permutation of [0, labels.size()) cut at
// floor(train_fraction * s). The stratified variant cuts each class separately
// and interleaves the result in permutation order.
SplitIndices split_indices(const std::vector<int>& labels, const SplitSpec& spec);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  SplitIndices indices;
  // Classes that ended up absent from one side of the split.
  std::vector<std::string> warnings;
};

TrainTestSplit split_train_test(const Dataset& d, const SplitSpec& spec);

// c Gaussian blobs (unit variance) whose means sit at separation * k on every
// feature for class k. Labels cycle 0,1,...,c-1 so every class is present.
Dataset make_synthetic(std::size_t s, std::size_t n, int c, double separation,
                       std::uint64_t seed);

// Number of distinct feature rows that carry more than one label.
std::size_t count_conflicting_duplicates(const Dataset& d);

}  // namespace bitbit
