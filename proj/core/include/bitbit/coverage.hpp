#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "bitbit/bitstring.hpp"
#include "bitbit/dataset.hpp"
#include "bitbit/dimred.hpp"
#include "bitbit/encoder.hpp"

namespace bitbit {

// Per-bitstring class histogram of an encoded sample set.
class BitstringTable {
 public:
  using Counts = std::vector<std::uint64_t>;

  BitstringTable(std::size_t width, int num_classes);

  void add(const Bitstring& z, int label, std::uint64_t count = 1);

  // nullptr when z never occurred.
  const Counts* find(const Bitstring& z) const;

  std::size_t width() const { return width_; }
  int num_classes() const { return num_classes_; }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<Bitstring, Counts>& entries() const { return entries_; }

  // Rough heap footprint; grows with unique bitstrings, not with total.
  std::size_t approx_bytes() const;

 private:
  std::size_t width_;
  int num_classes_;
  std::uint64_t total_ = 0;
  std::unordered_map<Bitstring, Counts> entries_;
};

BitstringTable build_table(std::span<const Bitstring> encoded, std::span<const int> labels,
                           int num_classes);

// argmax of a count vector, smallest class id on ties.
int argmax_label(std::span<const std::uint64_t> counts);

// C(z); throws if z is absent from the table.
int majority_label(const BitstringTable& table, const Bitstring& z);

// Fraction of samples that are not in their bucket's majority class.
double train_collision_incidence(const BitstringTable& table);

struct OverlapResult {
  std::uint64_t total = 0;        // test samples
  std::uint64_t overlapping = 0;  // test samples whose z occurs in training
  std::uint64_t errors = 0;       // overlapping with label != C(z)
  double incidence = 0.0;         // errors / total
  double overlap_fraction = 0.0;  // overlapping / total
};

OverlapResult test_overlap_incidence(const BitstringTable& train_table,
                                     std::span<const Bitstring> encoded_test,
                                     std::span<const int> test_labels);

struct CoverageMetrics {
  double train_collision_incidence = 0.0;
  double test_overlap_incidence = 0.0;
  double theoretical_train_accuracy = 1.0;
  double theoretical_test_accuracy = 1.0;
  double test_train_overlap_fraction = 0.0;
  // Raw counts behind the test figures, so either denominator can be used for
  // "correctly classified overlap".
  std::uint64_t test_total = 0;
  std::uint64_t test_overlapping = 0;
  std::uint64_t test_overlap_errors = 0;

  bool operator==(const CoverageMetrics&) const = default;
};

CoverageMetrics make_metrics(double train_incidence, const OverlapResult& overlap);

// ceil(log2 c), c >= 2.
int compute_q_y(int num_classes);

struct CurvePoint {
  std::size_t n_x = 0;
  CoverageMetrics metrics;

  bool operator==(const CurvePoint&) const = default;
};

struct QubitEstimate {
  double threshold = 1.0;
  std::vector<CurvePoint> curve;
  std::optional<std::size_t> q_train;
  std::optional<std::size_t> q_test;
  int q_y = 0;
  // max(q_train, q_test) + q_y; empty when either side was never covered.
  std::optional<std::size_t> q_dataset;

  bool covered() const { return q_dataset.has_value(); }
};

// First-crossing estimate at `threshold` read off an existing curve.
QubitEstimate derive_estimate(std::span<const CurvePoint> curve, double threshold,
                              int num_classes);

struct SweepOptions {
  double threshold = 1.0;
  std::size_t n_x_max = 128;
  std::size_t step = 1;
  EncoderOptions encoder;
};

// Sweeps N_x = 1, 1 + step, ... up to n_x_max, stopping once both the train
// and the test accuracy have reached the threshold at least once.
QubitEstimate sweep_qubits(const Dataset& train, const Dataset& test, const ReducerSpec& spec,
                           const SweepOptions& options);

// Same sweep over already copula-transformed values.
std::vector<CurvePoint> sweep_curve(const Matrix& train_uniform, std::span<const int> train_labels,
                                    const Matrix& test_uniform, std::span<const int> test_labels,
                                    std::span<const double> importances, int num_classes,
                                    const SweepOptions& options);

}  // namespace bitbit
