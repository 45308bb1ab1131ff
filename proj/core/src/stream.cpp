#include "bitbit/stream.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "bitbit/error.hpp"
#include "csv.hpp"

namespace bitbit {

int LabelMap::id_for(std::string_view label) {
  auto [it, inserted] = ids_.try_emplace(std::string(label), static_cast<int>(names_.size()));
  if (inserted) names_.emplace_back(label);
  return it->second;
}

// ---------------------------------------------------------------------------
// Sources

CsvSource::CsvSource(std::filesystem::path path, ColumnRef label_column, std::size_t batch_size,
                     std::shared_ptr<LabelMap> labels)
    : path_(std::move(path)),
      label_column_(std::move(label_column)),
      batch_size_(batch_size),
      labels_(labels ? std::move(labels) : std::make_shared<LabelMap>()) {
  if (batch_size_ < 1) throw Error("batch size must be at least 1");
  open();
}

void CsvSource::open() {
  in_.close();
  in_.clear();
  in_.open(path_);
  if (!in_) throw DataError("cannot open '" + path_.string() + "'");
  std::string line;
  if (!std::getline(in_, line)) throw DataError("'" + path_.string() + "' is empty");
  const auto header = detail::split_csv_line(line);
  label_index_ = detail::resolve_column(header, label_column_);
  num_columns_ = header.size();
  if (num_columns_ < 2) throw DataError("'" + path_.string() + "' has no feature columns");
  feature_names_.clear();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index_) feature_names_.push_back(header[c]);
  }
  next_record_ = 0;
}

void CsvSource::rewind() { open(); }

std::optional<Batch> CsvSource::next_batch() {
  Batch batch;
  batch.first_record = next_record_;
  std::vector<double> values;
  values.reserve(batch_size_ * (num_columns_ - 1));
  std::string line;
  while (batch.labels.size() < batch_size_ && std::getline(in_, line)) {
    if (detail::trim(line).empty()) continue;
    const std::size_t record = next_record_++;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != num_columns_) {
      throw DataError("record " + std::to_string(record) + ": expected " +
                      std::to_string(num_columns_) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_index_) continue;
      double v = 0.0;
      if (!detail::parse_real(fields[c], v) || !std::isfinite(v)) {
        throw DataError("record " + std::to_string(record) + ": " +
                        detail::cell_error(record + 1, c, c < label_index_ ? feature_names_[c]
                                                                           : feature_names_[c - 1],
                                           fields[c]));
      }
      values.push_back(v);
    }
    if (fields[label_index_].empty()) {
      throw DataError("record " + std::to_string(record) + ": missing label");
    }
    batch.labels.push_back(labels_->id_for(fields[label_index_]));
  }
  if (in_.bad()) throw DataError("read error on '" + path_.string() + "'");
  if (batch.labels.empty()) return std::nullopt;
  batch.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(batch.labels.size()),
                                      static_cast<Eigen::Index>(num_columns_ - 1));
  return batch;
}

DatasetSource::DatasetSource(const Dataset& data, std::size_t batch_size)
    : data_(&data), batch_size_(batch_size) {
  if (batch_size_ < 1) throw Error("batch size must be at least 1");
}

std::optional<Batch> DatasetSource::next_batch() {
  const std::size_t s = data_->num_samples();
  if (next_record_ >= s) return std::nullopt;
  const std::size_t m = std::min(batch_size_, s - next_record_);
  Batch batch;
  batch.first_record = next_record_;
  batch.features = data_->features.middleRows(static_cast<Eigen::Index>(next_record_),
                                              static_cast<Eigen::Index>(m));
  batch.labels.assign(data_->labels.begin() + static_cast<std::ptrdiff_t>(next_record_),
                      data_->labels.begin() + static_cast<std::ptrdiff_t>(next_record_ + m));
  next_record_ += m;
  return batch;
}

SyntheticSource::SyntheticSource(std::size_t num_records, std::size_t num_features,
                                 int num_classes, double separation, std::uint64_t seed,
                                 std::size_t batch_size)
    : num_records_(num_records),
      num_features_(num_features),
      num_classes_(num_classes),
      separation_(separation),
      seed_(seed),
      batch_size_(batch_size) {
  if (batch_size_ < 1) throw Error("batch size must be at least 1");
  if (num_classes_ < 1) throw Error("synthetic source needs at least one class");
  rewind();
}

void SyntheticSource::rewind() {
  next_record_ = 0;
  rng_.emplace(seed_);
}

std::optional<Batch> SyntheticSource::next_batch() {
  if (next_record_ >= num_records_) return std::nullopt;
  const std::size_t m = std::min(batch_size_, num_records_ - next_record_);
  Batch batch;
  batch.first_record = next_record_;
  batch.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(num_features_));
  batch.labels.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    const int y = static_cast<int>((next_record_ + r) % static_cast<std::size_t>(num_classes_));
    batch.labels[r] = y;
    for (std::size_t f = 0; f < num_features_; ++f) {
      batch.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          separation_ * y + rng_->normal();
    }
  }
  next_record_ += m;
  return batch;
}

// ---------------------------------------------------------------------------
// Encoded-dataset format

void write_encoded_header(std::ostream& out, std::size_t width) {
  out << "bitbit v1 width=" << width << '\n';
}

void write_encoded_record(std::ostream& out, const Bitstring& z, int label) {
  out << z.to_hex() << ' ' << label << '\n';
}

EncodedReader::EncodedReader(const std::filesystem::path& path) : file_(path), in_(&file_) {
  if (!file_) throw DataError("cannot open '" + path.string() + "'");
  read_header();
}

EncodedReader::EncodedReader(std::istream& in) : in_(&in) { read_header(); }

void EncodedReader::read_header() {
  static constexpr std::string_view kPrefix = "bitbit v1 width=";
  if (!std::getline(*in_, line_)) throw DataError("encoded file is empty");
  const std::string_view header = detail::trim(line_);
  if (header.substr(0, kPrefix.size()) != kPrefix) {
    throw DataError("encoded file header must start with '" + std::string(kPrefix) + "'");
  }
  const std::string_view number = header.substr(kPrefix.size());
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), width_);
  if (ec != std::errc() || ptr != number.data() + number.size() || width_ == 0) {
    throw DataError("encoded file header has an invalid width");
  }
}

bool EncodedReader::next(Bitstring& z, int& label) {
  while (std::getline(*in_, line_)) {
    const std::string_view text = detail::trim(line_);
    if (text.empty()) continue;
    const std::size_t index = records_++;
    const auto space = text.find(' ');
    if (space == std::string_view::npos) {
      throw DataError("record index " + std::to_string(index) + ": expected '<hex> <label>'");
    }
    try {
      z = Bitstring::from_hex(text.substr(0, space), width_);
    } catch (const DataError& e) {
      throw DataError("record index " + std::to_string(index) + ": " + e.what());
    }
    const std::string_view label_text = text.substr(space + 1);
    const auto [ptr, ec] =
        std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
    if (ec != std::errc() || ptr != label_text.data() + label_text.size() || label < 0) {
      throw DataError("record index " + std::to_string(index) + ": invalid label '" +
                      std::string(label_text) + "'");
    }
    return true;
  }
  if (in_->bad()) throw DataError("read error in encoded file");
  return false;
}

// ---------------------------------------------------------------------------
// Streaming passes

namespace {

void check_columns(const Batch& batch, std::size_t& n) {
  const auto cols = static_cast<std::size_t>(batch.features.cols());
  if (n == 0) {
    n = cols;
  } else if (cols != n) {
    throw DataError("batch starting at record " + std::to_string(batch.first_record) + " has " +
                    std::to_string(cols) + " columns, expected " + std::to_string(n));
  }
}

}  // namespace

EncoderBasis stream_fit_basis(RecordSource& train, const ReducerSpec& spec,
                              const StreamOptions& options, BatchAccumulators* accumulators) {
  if (spec.scheme == Scheme::kLsa) throw Error("streaming supports the none and pca schemes only");

  // Pass 1: reducer.
  train.rewind();
  std::size_t n = 0;
  std::size_t count = 0;
  std::size_t batches = 0;
  Matrix first_batch;
  IncrementalPcaState pca_state;
  Vector sum;
  Vector sum_squares;
  while (auto batch = train.next_batch()) {
    check_columns(*batch, n);
    count += batch->size();
    if (batches++ == 0 && spec.scheme == Scheme::kPca) first_batch = batch->features;
    if (spec.scheme == Scheme::kPca) {
      pca_state = incremental_update(std::move(pca_state), batch->features);
    } else {
      if (sum.size() == 0) {
        sum = Vector::Zero(static_cast<Eigen::Index>(n));
        sum_squares = Vector::Zero(static_cast<Eigen::Index>(n));
      }
      sum += batch->features.colwise().sum().transpose();
      sum_squares += batch->features.colwise().squaredNorm().transpose();
    }
  }
  if (count < 2) throw Error("training stream yields fewer than 2 samples");

  EncoderBasis basis;
  if (spec.scheme == Scheme::kPca) {
    // A single batch is the whole training set, so fit it directly.
    basis.reducer = batches == 1 ? fit_reducer(spec, first_batch)
                                 : finalize_incremental(pca_state, spec.n_components);
    first_batch.resize(0, 0);
  } else {
    if (spec.n_components != 0 && spec.n_components != n) {
      throw Error("scheme 'none' keeps every feature; n_components must equal " + std::to_string(n));
    }
    const auto cols = static_cast<Eigen::Index>(n);
    const double c = static_cast<double>(count);
    basis.reducer.scheme = Scheme::kNone;
    basis.reducer.center = Vector::Zero(cols);
    basis.reducer.components = Matrix::Identity(cols, cols);
    basis.reducer.explained_variance =
        ((sum_squares - sum.cwiseProduct(sum) / c) / (c - 1.0)).cwiseMax(0.0);
  }
  const std::size_t d = basis.reducer.output_dim();

  // Pass 2: min/max, batch MI, copula reservoir.
  BatchAccumulators acc;
  acc.mins = Vector::Constant(static_cast<Eigen::Index>(d), std::numeric_limits<double>::infinity());
  acc.maxs = Vector::Constant(static_cast<Eigen::Index>(d), -std::numeric_limits<double>::infinity());
  const std::size_t reservoir_cap = std::max<std::size_t>(options.reservoir_size, 1);
  Matrix reservoir(0, static_cast<Eigen::Index>(d));
  std::size_t reservoir_rows = 0;
  std::size_t seen = 0;
  Rng rng(options.reservoir_seed);

  train.rewind();
  while (auto batch = train.next_batch()) {
    check_columns(*batch, n);
    const Matrix reduced = transform(basis.reducer, batch->features);
    acc.mins = acc.mins.cwiseMin(reduced.colwise().minCoeff().transpose());
    acc.maxs = acc.maxs.cwiseMax(reduced.colwise().maxCoeff().transpose());
    if (reduced.rows() >= 2) {
      acc.batch_scores.push_back(importance_scores(reduced, batch->labels, options.mi_bins));
      acc.batch_rows.push_back(batch->size());
    }
    ++acc.batch_count;

    for (Eigen::Index r = 0; r < reduced.rows(); ++r, ++seen) {
      if (reservoir_rows < reservoir_cap) {
        if (reservoir_rows == static_cast<std::size_t>(reservoir.rows())) {
          const auto grown = std::min(reservoir_cap, std::max<std::size_t>(2 * reservoir_rows, 1024));
          reservoir.conservativeResize(static_cast<Eigen::Index>(grown), Eigen::NoChange);
        }
        reservoir.row(static_cast<Eigen::Index>(reservoir_rows++)) = reduced.row(r);
      } else {
        const std::uint64_t j = rng.uniform_index(seen + 1);
        if (j < reservoir_cap) reservoir.row(static_cast<Eigen::Index>(j)) = reduced.row(r);
      }
    }
  }
  reservoir.conservativeResize(static_cast<Eigen::Index>(reservoir_rows), Eigen::NoChange);

  basis.importances.assign(d, 0.0);
  double weight_total = 0.0;
  for (std::size_t b = 0; b < acc.batch_scores.size(); ++b) {
    const double w = options.weighted_mi ? static_cast<double>(acc.batch_rows[b]) : 1.0;
    weight_total += w;
    for (std::size_t k = 0; k < d; ++k) basis.importances[k] += w * acc.batch_scores[b][k];
  }
  if (weight_total > 0.0) {
    for (double& v : basis.importances) v /= weight_total;
  }
  basis.mins = acc.mins;
  basis.maxs = acc.maxs;
  basis.copula = fit_copula(normalize(reservoir, basis.mins, basis.maxs));
  if (accumulators != nullptr) *accumulators = std::move(acc);
  return basis;
}

EncoderModel finish_stream_encoder(const EncoderBasis& basis, std::size_t total_bits,
                                   const StreamConfig& config) {
  EncoderModel model = with_budget(basis, total_bits);
  std::filesystem::create_directories(config.work_dir);
  const auto train_path = config.work_dir / "train.enc";
  std::ofstream out(train_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + train_path.string() + "'");
  stream_encode(model, config.train, out);
  out.close();
  if (!out) throw Error("write to '" + train_path.string() + "' failed");
  persist_model(model, config.work_dir / "model.json");
  return model;
}

EncoderModel stream_fit_encoder(const StreamConfig& config, const ReducerSpec& spec,
                                std::size_t total_bits, const StreamOptions& options) {
  return finish_stream_encoder(stream_fit_basis(config.train, spec, options), total_bits, config);
}

std::size_t stream_encode(const EncoderModel& model, RecordSource& source, std::ostream& sink) {
  source.rewind();
  write_encoded_header(sink, model.width());
  std::size_t count = 0;
  while (auto batch = source.next_batch()) {
    const auto codes = encode_samples(model, batch->features);
    for (std::size_t i = 0; i < codes.size(); ++i) write_encoded_record(sink, codes[i], batch->labels[i]);
    count += codes.size();
  }
  if (!sink) throw Error("failed writing encoded records");
  return count;
}

namespace {

void add_checked(BitstringTable& table, const Bitstring& z, int label, std::size_t max_bytes) {
  const std::size_t before = table.size();
  table.add(z, label);
  if (table.size() != before && table.approx_bytes() > max_bytes) {
    throw CapacityError("bitstring table exceeds the " + std::to_string(max_bytes) +
                        "-byte budget at " + std::to_string(table.size()) + " unique bitstrings");
  }
}

}  // namespace

CoverageMetrics stream_coverage(const std::filesystem::path& encoded_train,
                                const std::filesystem::path& encoded_test, int num_classes,
                                TestRule rule, std::size_t max_table_bytes) {
  EncodedReader train_reader(encoded_train);
  BitstringTable train(train_reader.width(), num_classes);
  Bitstring z;
  int label = 0;
  while (train_reader.next(z, label)) add_checked(train, z, label, max_table_bytes);
  const double train_incidence = train_collision_incidence(train);

  EncodedReader test_reader(encoded_test);
  if (test_reader.width() != train.width()) {
    throw DataError("encoded train width " + std::to_string(train.width()) +
                    " differs from test width " + std::to_string(test_reader.width()));
  }

  OverlapResult overlap;
  if (rule == TestRule::kPerSample) {
    while (test_reader.next(z, label)) {
      if (label >= num_classes) throw DataError("test label outside the class range");
      ++overlap.total;
      const auto* counts = train.find(z);
      if (counts == nullptr) continue;
      ++overlap.overlapping;
      if (label != argmax_label(*counts)) ++overlap.errors;
    }
  } else {
    BitstringTable test(test_reader.width(), num_classes);
    while (test_reader.next(z, label)) add_checked(test, z, label, max_table_bytes);
    overlap.total = test.total();
    for (const auto& [code, test_counts] : test.entries()) {
      const auto* train_counts = train.find(code);
      if (train_counts == nullptr) continue;
      std::uint64_t n_z = 0;
      for (auto c : test_counts) n_z += c;
      overlap.overlapping += n_z;
      if (argmax_label(test_counts) != argmax_label(*train_counts)) overlap.errors += n_z;
    }
  }
  if (overlap.total > 0) {
    overlap.incidence = static_cast<double>(overlap.errors) / static_cast<double>(overlap.total);
    overlap.overlap_fraction =
        static_cast<double>(overlap.overlapping) / static_cast<double>(overlap.total);
  }
  return make_metrics(train_incidence, overlap);
}

std::vector<CurvePoint> stream_sweep_curve(const StreamConfig& config, RecordSource& test,
                                           const ReducerSpec& spec, int num_classes,
                                           const StreamSweepOptions& options,
                                           EncoderBasis* fitted_basis) {
  const SweepOptions& sweep = options.sweep;
  if (!(sweep.threshold > 0.0 && sweep.threshold <= 1.0)) throw Error("threshold must lie in (0, 1]");
  if (sweep.step < 1) throw Error("sweep step must be at least 1");

  const EncoderBasis basis = stream_fit_basis(config.train, spec, options.stream);
  const auto test_path = config.work_dir / "test.enc";
  std::vector<CurvePoint> curve;
  bool train_met = false;
  bool test_met = false;
  for (std::size_t n_x = 1; n_x <= sweep.n_x_max; n_x += sweep.step) {
    const EncoderModel model = finish_stream_encoder(basis, n_x, config);
    {
      std::ofstream out(test_path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write '" + test_path.string() + "'");
      stream_encode(model, test, out);
    }
    curve.push_back({n_x, stream_coverage(config.work_dir / "train.enc", test_path, num_classes,
                                          options.rule, options.stream.max_table_bytes)});
    train_met = train_met || curve.back().metrics.theoretical_train_accuracy >= sweep.threshold;
    test_met = test_met || curve.back().metrics.theoretical_test_accuracy >= sweep.threshold;
    if (train_met && test_met) break;
  }
  if (fitted_basis != nullptr) *fitted_basis = basis;
  return curve;
}

}  // namespace bitbit
