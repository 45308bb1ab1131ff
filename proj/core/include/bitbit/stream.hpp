#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bitbit/coverage.hpp"
#include "bitbit/dataset.hpp"
#include "bitbit/encoder.hpp"
#include "bitbit/random.hpp"

namespace bitbit {

// Label text -> contiguous id, assigned in order of first appearance. Shared
// between the train and test sources so both see the same ids.
class LabelMap {
 public:
  int id_for(std::string_view label);
  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

struct Batch {
  Matrix features;
  std::vector<int> labels;
  std::size_t first_record = 0;  // zero-based index of the batch's first row

  std::size_t size() const { return labels.size(); }
};

// A rewindable stream of labelled rows delivered in fixed-size batches.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual std::optional<Batch> next_batch() = 0;
  virtual void rewind() = 0;
  virtual std::size_t batch_size() const = 0;
};

// Reads a headered CSV `batch_size` rows at a time.
class CsvSource final : public RecordSource {
 public:
  CsvSource(std::filesystem::path path, ColumnRef label_column, std::size_t batch_size,
            std::shared_ptr<LabelMap> labels = nullptr);

  std::optional<Batch> next_batch() override;
  void rewind() override;
  std::size_t batch_size() const override { return batch_size_; }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::shared_ptr<LabelMap>& label_map() const { return labels_; }

 private:
  void open();

  std::filesystem::path path_;
  ColumnRef label_column_;
  std::size_t batch_size_;
  std::shared_ptr<LabelMap> labels_;
  std::ifstream in_;
  std::size_t label_index_ = 0;
  std::size_t num_columns_ = 0;
  std::vector<std::string> feature_names_;
  std::size_t next_record_ = 0;
};

// Batches over an in-memory dataset (which must outlive the source).
class DatasetSource final : public RecordSource {
 public:
  DatasetSource(const Dataset& data, std::size_t batch_size);

  std::optional<Batch> next_batch() override;
  void rewind() override { next_record_ = 0; }
  std::size_t batch_size() const override { return batch_size_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::size_t next_record_ = 0;
};

// Generates Gaussian-blob rows on the fly (same family as make_synthetic)
// without ever holding more than one batch.
class SyntheticSource final : public RecordSource {
 public:
  SyntheticSource(std::size_t num_records, std::size_t num_features, int num_classes,
                  double separation, std::uint64_t seed, std::size_t batch_size);

  std::optional<Batch> next_batch() override;
  void rewind() override;
  std::size_t batch_size() const override { return batch_size_; }

 private:
  std::size_t num_records_;
  std::size_t num_features_;
  int num_classes_;
  double separation_;
  std::uint64_t seed_;
  std::size_t batch_size_;
  std::size_t next_record_ = 0;
  std::optional<Rng> rng_;
};

struct StreamOptions {
  // Rows kept for fitting the copula out of core.
  std::size_t reservoir_size = 100000;
  std::uint64_t reservoir_seed = 0;
  // Average batch MI scores weighted by batch rows instead of uniformly.
  bool weighted_mi = false;
  std::size_t mi_bins = 0;
  std::size_t max_table_bytes = std::size_t{4} << 30;
};

struct StreamConfig {
  RecordSource& train;
  std::filesystem::path work_dir;
};

// Running statistics gathered by the second training pass.
struct BatchAccumulators {
  Vector mins;
  Vector maxs;
  std::vector<std::vector<double>> batch_scores;
  std::vector<std::size_t> batch_rows;
  std::size_t batch_count = 0;
};

// Passes 1 and 2: incremental reducer fit, then per-batch min/max, batch MI
// (averaged) and a reservoir sample for the copula.
EncoderBasis stream_fit_basis(RecordSource& train, const ReducerSpec& spec,
                              const StreamOptions& options = {},
                              BatchAccumulators* accumulators = nullptr);

// Allocation at `total_bits` plus pass 3: writes <work_dir>/train.enc and
// <work_dir>/model.json.
EncoderModel finish_stream_encoder(const EncoderBasis& basis, std::size_t total_bits,
                                   const StreamConfig& config);

EncoderModel stream_fit_encoder(const StreamConfig& config, const ReducerSpec& spec,
                                std::size_t total_bits, const StreamOptions& options = {});

// Encodes every record of `source` into `sink` in the encoded-dataset format.
// Memory stays at one batch plus the model.
std::size_t stream_encode(const EncoderModel& model, RecordSource& source, std::ostream& sink);

void write_encoded_header(std::ostream& out, std::size_t width);
void write_encoded_record(std::ostream& out, const Bitstring& z, int label);

// Reader for the `bitbit v1 width=<N>` record format.
class EncodedReader {
 public:
  explicit EncodedReader(const std::filesystem::path& path);
  explicit EncodedReader(std::istream& in);

  std::size_t width() const { return width_; }
  // False at end of input; throws DataError on a malformed record.
  bool next(Bitstring& z, int& label);
  std::size_t records_read() const { return records_; }

 private:
  void read_header();

  std::ifstream file_;
  std::istream* in_;
  std::size_t width_ = 0;
  std::size_t records_ = 0;
  std::string line_;
};

enum class TestRule {
  // A test bitstring counts against all its samples when its majority test
  // label differs from the train majority label.
  kBatchMajority,
  // Each test sample is judged by its own label, as in the in-memory path.
  kPerSample,
};

CoverageMetrics stream_coverage(const std::filesystem::path& encoded_train,
                                const std::filesystem::path& encoded_test, int num_classes,
                                TestRule rule = TestRule::kBatchMajority,
                                std::size_t max_table_bytes = std::size_t{4} << 30);

struct StreamSweepOptions {
  SweepOptions sweep;
  StreamOptions stream;
  TestRule rule = TestRule::kBatchMajority;
};

// For N_x = 1, 1 + step, ...: pass 3, encode the test source, stream coverage.
// The work dir ends up holding the artifacts of the last swept N_x.
std::vector<CurvePoint> stream_sweep_curve(const StreamConfig& config, RecordSource& test,
                                           const ReducerSpec& spec, int num_classes,
                                           const StreamSweepOptions& options,
                                           EncoderBasis* fitted_basis = nullptr);

}  // namespace bitbit
