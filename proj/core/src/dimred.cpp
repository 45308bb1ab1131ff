#include "bitbit/dimred.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "bitbit/error.hpp"

namespace bitbit {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kNone:
      return "none";
    case Scheme::kPca:
      return "pca";
    case Scheme::kLsa:
      return "lsa";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "none") return Scheme::kNone;
  if (lower == "pca") return Scheme::kPca;
  if (lower == "lsa") return Scheme::kLsa;
  throw Error("unknown reduction scheme '" + std::string(name) + "' (expected none, pca or lsa)");
}

namespace {

std::size_t resolve_components(std::size_t requested, std::size_t n) {
  const std::size_t d = requested == 0 ? n : requested;
  if (d > n) {
    throw Error("n_components " + std::to_string(d) + " exceeds feature count " +
                std::to_string(n));
  }
  return d;
}

// Largest-magnitude entry positive; the first index wins ties.
void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) v = -v;
}

// Top-d eigenpairs of a symmetric matrix, descending. Directions beyond the
// numerical rank are replaced by a Gram-Schmidt completion against e_0, e_1, ...
void top_components(const Matrix& symmetric, std::size_t d, FittedReducer& out) {
  const auto n = symmetric.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(symmetric),
                                                         Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Vector& values = solver.eigenvalues();  // ascending
  const double largest = n > 0 ? std::max(values[n - 1], 0.0) : 0.0;
  const double tolerance = largest * static_cast<double>(n) * 1e-13;

  out.components = Matrix::Zero(static_cast<Eigen::Index>(d), n);
  out.explained_variance = Vector::Zero(static_cast<Eigen::Index>(d));

  std::size_t rank = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const Eigen::Index idx = n - 1 - static_cast<Eigen::Index>(k);
    if (!(values[idx] > tolerance)) break;
    out.components.row(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(idx).transpose();
    out.explained_variance[static_cast<Eigen::Index>(k)] = values[idx];
    ++rank;
  }

  if (rank < d) {
    out.warnings.push_back("numerical rank " + std::to_string(rank) + " < " + std::to_string(d) +
                           " components; padded with zero-variance directions");
    std::size_t filled = rank;
    for (Eigen::Index e = 0; e < n && filled < d; ++e) {
      Vector v = Vector::Unit(n, e);
      // Two rounds of modified Gram-Schmidt for numerical orthogonality.
      for (int round = 0; round < 2; ++round) {
        for (std::size_t k = 0; k < filled; ++k) {
          const auto row = out.components.row(static_cast<Eigen::Index>(k));
          v -= row.dot(v) * row.transpose();
        }
      }
      const double norm = v.norm();
      if (norm < 1e-8) continue;
      out.components.row(static_cast<Eigen::Index>(filled++)) = (v / norm).transpose();
    }
  }

  for (std::size_t k = 0; k < d; ++k) {
    Vector row = out.components.row(static_cast<Eigen::Index>(k)).transpose();
    fix_sign(row);
    out.components.row(static_cast<Eigen::Index>(k)) = row.transpose();
  }
}

}  // namespace

FittedReducer fit_reducer(const ReducerSpec& spec, const Matrix& x) {
  const std::size_t s = static_cast<std::size_t>(x.rows());
  const std::size_t n = static_cast<std::size_t>(x.cols());
  if (s < 2) throw Error("fit_reducer needs at least 2 samples");
  if (n < 1) throw Error("fit_reducer needs at least 1 feature");

  FittedReducer out;
  out.scheme = spec.scheme;
  const auto cols = static_cast<Eigen::Index>(n);

  switch (spec.scheme) {
    case Scheme::kNone: {
      if (spec.n_components != 0 && spec.n_components != n) {
        throw Error("scheme 'none' keeps every feature; n_components must equal " +
                    std::to_string(n));
      }
      out.center = Vector::Zero(cols);
      out.components = Matrix::Identity(cols, cols);
      const Vector mean = x.colwise().mean().transpose();
      out.explained_variance =
          ((x.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<double>(s - 1))
              .transpose();
      return out;
    }
    case Scheme::kPca: {
      const std::size_t d = resolve_components(spec.n_components, n);
      out.center = x.colwise().mean().transpose();
      const Matrix centered = x.rowwise() - out.center.transpose();
      const Matrix covariance = centered.transpose() * centered / static_cast<double>(s - 1);
      top_components(covariance, d, out);
      return out;
    }
    case Scheme::kLsa: {
      const std::size_t d = resolve_components(spec.n_components, n);
      out.center = Vector::Zero(cols);
      // Right singular vectors of x are the eigenvectors of x^T x.
      const Matrix second_moment = x.transpose() * x / static_cast<double>(s - 1);
      top_components(second_moment, d, out);
      return out;
    }
  }
  throw Error("unhandled scheme");
}

Matrix transform(const FittedReducer& reducer, const Matrix& features) {
  if (static_cast<std::size_t>(features.cols()) != reducer.input_dim()) {
    throw DataError("transform: expected " + std::to_string(reducer.input_dim()) +
                    " columns, found " + std::to_string(features.cols()));
  }
  if (reducer.scheme == Scheme::kNone) return features;
  return (features.rowwise() - reducer.center.transpose()) * reducer.components.transpose();
}

IncrementalPcaState incremental_update(IncrementalPcaState state, const Matrix& batch) {
  if (state.count == 0 && state.n_features() == 0) state = IncrementalPcaState(batch.cols());
  if (static_cast<std::size_t>(batch.cols()) != state.n_features()) {
    if (batch.rows() == 0) return state;
    throw DataError("incremental_update: expected " + std::to_string(state.n_features()) +
                    " columns, found " + std::to_string(batch.cols()));
  }
  if (batch.rows() == 0) return state;
  state.count += static_cast<std::size_t>(batch.rows());
  state.sum += batch.colwise().sum().transpose();
  // Accumulate the lower triangle and mirror it so the Gram matrix stays
  // exactly symmetric.
  state.gram.selfadjointView<Eigen::Lower>().rankUpdate(batch.transpose());
  state.gram.triangularView<Eigen::StrictlyUpper>() = state.gram.transpose();
  return state;
}

IncrementalPcaState merge(const IncrementalPcaState& a, const IncrementalPcaState& b) {
  if (a.count == 0 && a.n_features() == 0) return b;
  if (b.count == 0 && b.n_features() == 0) return a;
  if (a.n_features() != b.n_features()) throw DataError("merge: feature counts differ");
  IncrementalPcaState out = a;
  out.count += b.count;
  out.sum += b.sum;
  out.gram += b.gram;
  return out;
}

FittedReducer finalize_incremental(const IncrementalPcaState& state, std::size_t n_components) {
  if (state.count < 2) throw Error("finalize_incremental needs at least 2 samples");
  const std::size_t n = state.n_features();
  const std::size_t d = resolve_components(n_components, n);
  const double count = static_cast<double>(state.count);

  FittedReducer out;
  out.scheme = Scheme::kPca;
  out.center = state.sum / count;
  Matrix covariance = (state.gram - count * out.center * out.center.transpose()) / (count - 1.0);
  covariance.triangularView<Eigen::StrictlyUpper>() = covariance.transpose();
  top_components(covariance, d, out);
  return out;
}

nlohmann::json to_json(const FittedReducer& r) {
  nlohmann::json j;
  j["scheme"] = std::string(to_string(r.scheme));
  j["n_components"] = r.output_dim();
  j["n_features"] = r.input_dim();
  j["center"] = std::vector<double>(r.center.begin(), r.center.end());
  j["components"] = std::vector<double>(r.components.data(),
                                        r.components.data() + r.components.size());
  j["explained_variance"] =
      std::vector<double>(r.explained_variance.begin(), r.explained_variance.end());
  return j;
}

FittedReducer reducer_from_json(const nlohmann::json& j) {
  FittedReducer r;
  r.scheme = parse_scheme(j.at("scheme").get<std::string>());
  const auto d = j.at("n_components").get<Eigen::Index>();
  const auto n = j.at("n_features").get<Eigen::Index>();
  const auto center = j.at("center").get<std::vector<double>>();
  const auto components = j.at("components").get<std::vector<double>>();
  const auto variance = j.at("explained_variance").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(center.size()) != n ||
      static_cast<Eigen::Index>(components.size()) != d * n ||
      static_cast<Eigen::Index>(variance.size()) != d) {
    throw DataError("reducer JSON has inconsistent shapes");
  }
  r.center = Eigen::Map<const Vector>(center.data(), n);
  r.components = Eigen::Map<const Matrix>(components.data(), d, n);
  r.explained_variance = Eigen::Map<const Vector>(variance.data(), d);
  return r;
}

}  // namespace bitbit
