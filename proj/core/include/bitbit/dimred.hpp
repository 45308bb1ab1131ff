#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bitbit/dataset.hpp"

namespace bitbit {

enum class Scheme { kNone, kPca, kLsa };

std::string_view to_string(Scheme scheme);
// Accepts "none", "pca", "lsa" (case-insensitive).
Scheme parse_scheme(std::string_view name);

struct ReducerSpec {
  Scheme scheme = Scheme::kPca;
  // 0 means "as many components as input features".
  std::size_t n_components = 0;
};

// A fitted linear reducer: transform(x) = (x - center) * components^T.
// Component rows are orthonormal and each row's largest-magnitude entry is
// positive (first such entry on ties).
struct FittedReducer {
  Scheme scheme = Scheme::kNone;
  Vector center;
  Matrix components;          // D x n
  Vector explained_variance;  // length D; non-increasing for pca/lsa
  std::vector<std::string> warnings;

  std::size_t input_dim() const { return static_cast<std::size_t>(components.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }
};

FittedReducer fit_reducer(const ReducerSpec& spec, const Matrix& train_features);

Matrix transform(const FittedReducer& reducer, const Matrix& features);

// Exact streaming PCA state: running row count, column sums and Gram matrix.
struct IncrementalPcaState {
  std::size_t count = 0;
  Vector sum;
  Matrix gram;

  explicit IncrementalPcaState(std::size_t n_features = 0)
      : sum(Vector::Zero(static_cast<Eigen::Index>(n_features))),
        gram(Matrix::Zero(static_cast<Eigen::Index>(n_features),
                          static_cast<Eigen::Index>(n_features))) {}

  std::size_t n_features() const { return static_cast<std::size_t>(sum.size()); }
};

IncrementalPcaState incremental_update(IncrementalPcaState state, const Matrix& batch);

// Combines two states built from disjoint row sets.
IncrementalPcaState merge(const IncrementalPcaState& a, const IncrementalPcaState& b);

// n_components == 0 means all features.
FittedReducer finalize_incremental(const IncrementalPcaState& state, std::size_t n_components);

nlohmann::json to_json(const FittedReducer& reducer);
FittedReducer reducer_from_json(const nlohmann::json& j);

}  // namespace bitbit
