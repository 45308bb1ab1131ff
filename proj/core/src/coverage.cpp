#include "bitbit/coverage.hpp"

#include <algorithm>

#include "bitbit/error.hpp"

namespace bitbit {

BitstringTable::BitstringTable(std::size_t width, int num_classes)
    : width_(width), num_classes_(num_classes) {
  if (num_classes < 1) throw Error("a bitstring table needs at least one class");
}

void BitstringTable::add(const Bitstring& z, int label, std::uint64_t count) {
  if (z.width() != width_) {
    throw DataError("bitstring width " + std::to_string(z.width()) + " does not match table width " +
                    std::to_string(width_));
  }
  if (label < 0 || label >= num_classes_) {
    throw DataError("label " + std::to_string(label) + " outside [0, " +
                    std::to_string(num_classes_) + ")");
  }
  if (count == 0) return;
  auto [it, inserted] = entries_.try_emplace(z);
  if (inserted) it->second.assign(static_cast<std::size_t>(num_classes_), 0);
  it->second[static_cast<std::size_t>(label)] += count;
  total_ += count;
}

const BitstringTable::Counts* BitstringTable::find(const Bitstring& z) const {
  const auto it = entries_.find(z);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t BitstringTable::approx_bytes() const {
  const std::size_t words = (width_ + 63) / 64;
  const std::size_t per_entry = sizeof(Bitstring) + sizeof(Counts) + 2 * sizeof(void*) +
                                sizeof(std::size_t) + words * sizeof(std::uint64_t) +
                                static_cast<std::size_t>(num_classes_) * sizeof(std::uint64_t);
  return entries_.size() * per_entry + entries_.bucket_count() * sizeof(void*);
}

BitstringTable build_table(std::span<const Bitstring> encoded, std::span<const int> labels,
                           int num_classes) {
  if (encoded.size() != labels.size()) throw DataError("encoded and label lengths differ");
  BitstringTable table(encoded.empty() ? 0 : encoded.front().width(), num_classes);
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i].width() != table.width()) throw DataError("mixed bitstring widths");
    table.add(encoded[i], labels[i]);
  }
  return table;
}

int argmax_label(std::span<const std::uint64_t> counts) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<int>(best);
}

int majority_label(const BitstringTable& table, const Bitstring& z) {
  const auto* counts = table.find(z);
  if (counts == nullptr) throw Error("bitstring " + z.to_string() + " is not in the table");
  return argmax_label(*counts);
}

double train_collision_incidence(const BitstringTable& table) {
  if (table.total() == 0) throw Error("collision incidence of an empty table");
  std::uint64_t minority = 0;
  for (const auto& [z, counts] : table.entries()) {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    minority += sum - *std::max_element(counts.begin(), counts.end());
  }
  return static_cast<double>(minority) / static_cast<double>(table.total());
}

OverlapResult test_overlap_incidence(const BitstringTable& train_table,
                                     std::span<const Bitstring> encoded_test,
                                     std::span<const int> test_labels) {
  if (encoded_test.size() != test_labels.size()) throw DataError("encoded and label lengths differ");
  OverlapResult out;
  out.total = encoded_test.size();
  for (std::size_t i = 0; i < encoded_test.size(); ++i) {
    if (encoded_test[i].width() != train_table.width()) {
      throw DataError("test bitstring width does not match the training table");
    }
    const auto* counts = train_table.find(encoded_test[i]);
    if (counts == nullptr) continue;
    ++out.overlapping;
    if (test_labels[i] != argmax_label(*counts)) ++out.errors;
  }
  if (out.total > 0) {
    out.incidence = static_cast<double>(out.errors) / static_cast<double>(out.total);
    out.overlap_fraction = static_cast<double>(out.overlapping) / static_cast<double>(out.total);
  }
  return out;
}

CoverageMetrics make_metrics(double train_incidence, const OverlapResult& overlap) {
  CoverageMetrics m;
  m.train_collision_incidence = train_incidence;
  m.test_overlap_incidence = overlap.incidence;
  m.theoretical_train_accuracy = 1.0 - train_incidence;
  m.theoretical_test_accuracy = 1.0 - overlap.incidence;
  m.test_train_overlap_fraction = overlap.overlap_fraction;
  m.test_total = overlap.total;
  m.test_overlapping = overlap.overlapping;
  m.test_overlap_errors = overlap.errors;
  return m;
}

int compute_q_y(int num_classes) {
  if (num_classes < 2) throw Error("Q_y needs at least 2 classes");
  int bits = 0;
  while ((std::int64_t{1} << bits) < num_classes) ++bits;
  return bits;
}

QubitEstimate derive_estimate(std::span<const CurvePoint> curve, double threshold,
                              int num_classes) {
  QubitEstimate est;
  est.threshold = threshold;
  est.q_y = compute_q_y(num_classes);
  est.curve.assign(curve.begin(), curve.end());
  for (const auto& point : curve) {
    if (!est.q_train && point.metrics.theoretical_train_accuracy >= threshold) {
      est.q_train = point.n_x;
    }
    if (!est.q_test && point.metrics.theoretical_test_accuracy >= threshold) {
      est.q_test = point.n_x;
    }
  }
  if (est.q_train && est.q_test) {
    est.q_dataset = std::max(*est.q_train, *est.q_test) + static_cast<std::size_t>(est.q_y);
  }
  return est;
}

namespace {

void check_sweep_options(const SweepOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold <= 1.0)) {
    throw Error("threshold must lie in (0, 1]");
  }
  if (options.step < 1) throw Error("sweep step must be at least 1");
  if (options.n_x_max < 1) throw Error("n_x_max must be at least 1");
}

}  // namespace

std::vector<CurvePoint> sweep_curve(const Matrix& train_uniform, std::span<const int> train_labels,
                                    const Matrix& test_uniform, std::span<const int> test_labels,
                                    std::span<const double> importances, int num_classes,
                                    const SweepOptions& options) {
  check_sweep_options(options);
  std::vector<CurvePoint> curve;
  bool train_met = false;
  bool test_met = false;
  for (std::size_t n_x = 1; n_x <= options.n_x_max; n_x += options.step) {
    const BitAllocation allocation = allocate_bits(importances, n_x);
    const auto train_codes = discretize_rows(train_uniform, allocation);
    const auto test_codes = discretize_rows(test_uniform, allocation);
    const BitstringTable table = build_table(train_codes, train_labels, num_classes);
    const double train_incidence = train_collision_incidence(table);
    const OverlapResult overlap = test_overlap_incidence(table, test_codes, test_labels);
    curve.push_back({n_x, make_metrics(train_incidence, overlap)});

    train_met = train_met || curve.back().metrics.theoretical_train_accuracy >= options.threshold;
    test_met = test_met || curve.back().metrics.theoretical_test_accuracy >= options.threshold;
    if (train_met && test_met) break;
  }
  return curve;
}

QubitEstimate sweep_qubits(const Dataset& train, const Dataset& test, const ReducerSpec& spec,
                           const SweepOptions& options) {
  check_sweep_options(options);
  if (train.num_features() != test.num_features()) {
    throw DataError("train and test feature counts differ");
  }
  const int num_classes = std::max(train.num_classes, test.num_classes);
  const EncoderBasis basis = fit_encoder_basis(train, spec, options.encoder);
  const Matrix train_u =
      copula_values(basis.reducer, basis.mins, basis.maxs, basis.copula, train.features);
  const Matrix test_u =
      copula_values(basis.reducer, basis.mins, basis.maxs, basis.copula, test.features);
  const auto curve = sweep_curve(train_u, train.labels, test_u, test.labels, basis.importances,
                                 num_classes, options);
  return derive_estimate(curve, options.threshold, num_classes);
}

}  // namespace bitbit
