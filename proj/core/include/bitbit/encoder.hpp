#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bitbit/bitstring.hpp"
#include "bitbit/dataset.hpp"
#include "bitbit/dimred.hpp"

namespace bitbit {

inline constexpr int kModelSchemaVersion = 1;

// clamp(floor(sqrt(s)), 8, 256)
std::size_t default_mi_bins(std::size_t num_samples);

// Plug-in mutual information I(column; label) in bits over an equal-frequency
// binning of the column. Tied values always share a bin, so a constant column
// scores exactly 0. bins == 0 selects default_mi_bins.
double estimate_mutual_information(std::span<const double> column, std::span<const int> labels,
                                   std::size_t bins = 0);

// One score per column of `reduced`.
std::vector<double> importance_scores(const Matrix& reduced, std::span<const int> labels,
                                      std::size_t bins = 0);

struct BitAllocation {
  std::vector<std::size_t> bits;
  std::size_t total = 0;
};

// Proportional allocation of `total_bits` over components, rounded half-to-even
// and then repaired so the bits sum to exactly total_bits. Repair favours the
// lower index on ties: it receives increments first and loses decrements last.
// All-zero scores spread the bits uniformly, remainder to the lowest indices.
BitAllocation allocate_bits(std::span<const double> scores, std::size_t total_bits);

// Empirical CDF per component, stored as sorted training columns.
struct CopulaModel {
  std::vector<std::vector<double>> sorted_columns;

  std::size_t num_components() const { return sorted_columns.size(); }
};

CopulaModel fit_copula(const Matrix& normalized_train);

// #{train values <= value} / (s + 1)
double apply_copula(const CopulaModel& copula, double value, std::size_t component);

// floor(clamp(x, 0, 1) * 2^bits) clamped to 2^bits - 1; bits <= 63.
std::uint64_t discretize_value(double x, unsigned bits);

struct EncoderOptions {
  std::size_t mi_bins = 0;
};

// Everything the encoder fits that does not depend on the qubit budget.
struct EncoderBasis {
  FittedReducer reducer;
  Vector mins;
  Vector maxs;
  CopulaModel copula;
  std::vector<double> importances;

  std::size_t num_components() const { return static_cast<std::size_t>(mins.size()); }
};

struct EncoderModel {
  FittedReducer reducer;
  Vector mins;
  Vector maxs;
  CopulaModel copula;
  std::vector<double> importances;
  BitAllocation allocation;

  std::size_t width() const { return allocation.total; }
  std::size_t num_components() const { return static_cast<std::size_t>(mins.size()); }
};

EncoderBasis fit_encoder_basis(const Dataset& train, const ReducerSpec& spec,
                               const EncoderOptions& options = {});

EncoderModel with_budget(const EncoderBasis& basis, std::size_t total_bits);

// reduce -> importance -> allocation -> min/max -> copula, all on `train`.
EncoderModel fit_encoder(const Dataset& train, const ReducerSpec& spec, std::size_t total_bits,
                         const EncoderOptions& options = {});

// Min-max normalization against the fitted bounds, clamped to [0, 1]. A
// constant component (min == max) maps to 0.
Matrix normalize(const Matrix& reduced, const Vector& mins, const Vector& maxs);

// Rows of copula-transformed values in [0, 1), one column per component.
Matrix copula_values(const FittedReducer& reducer, const Vector& mins, const Vector& maxs,
                     const CopulaModel& copula, const Matrix& features);

// Concatenates each row's per-component codes, component 0 most significant.
std::vector<Bitstring> discretize_rows(const Matrix& uniform_values, const BitAllocation& allocation);

std::vector<Bitstring> encode_samples(const EncoderModel& model, const Matrix& features);

nlohmann::json to_json(const EncoderModel& model);
EncoderModel model_from_json(const nlohmann::json& j);

void persist_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);

}  // namespace bitbit
