#include "bitbit/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bitbit/error.hpp"

namespace bitbit {

std::size_t default_mi_bins(std::size_t num_samples) {
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(num_samples))));
  return std::clamp<std::size_t>(root, 8, 256);
}

double estimate_mutual_information(std::span<const double> column, std::span<const int> labels,
                                   std::size_t bins) {
  const std::size_t s = column.size();
  if (s < 2) throw Error("mutual information needs at least 2 samples");
  if (labels.size() != s) throw DataError("column and label lengths differ");
  if (bins == 0) bins = default_mi_bins(s);

  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });

  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw DataError("negative class label");
    num_classes = std::max(num_classes, y + 1);
  }

  // Equal-frequency bins keyed on the lowest sorted position of each tie group.
  std::vector<std::size_t> joint(bins * static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> bin_total(bins, 0);
  std::vector<std::size_t> class_total(static_cast<std::size_t>(num_classes), 0);
  std::size_t tie_start = 0;
  for (std::size_t p = 0; p < s; ++p) {
    if (p > 0 && column[order[p]] != column[order[p - 1]]) tie_start = p;
    const std::size_t bin = tie_start * bins / s;
    const auto y = static_cast<std::size_t>(labels[order[p]]);
    ++joint[bin * static_cast<std::size_t>(num_classes) + y];
    ++bin_total[bin];
    ++class_total[y];
  }

  const double total = static_cast<double>(s);
  double info = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (bin_total[b] == 0) continue;
    for (std::size_t y = 0; y < class_total.size(); ++y) {
      const std::size_t n_by = joint[b * class_total.size() + y];
      if (n_by == 0) continue;
      const double p_by = static_cast<double>(n_by) / total;
      info += p_by * std::log2(static_cast<double>(n_by) * total /
                               (static_cast<double>(bin_total[b]) *
                                static_cast<double>(class_total[y])));
    }
  }
  return std::max(info, 0.0);
}

std::vector<double> importance_scores(const Matrix& reduced, std::span<const int> labels,
                                      std::size_t bins) {
  std::vector<double> scores(static_cast<std::size_t>(reduced.cols()));
  std::vector<double> column(static_cast<std::size_t>(reduced.rows()));
  for (Eigen::Index d = 0; d < reduced.cols(); ++d) {
    for (Eigen::Index r = 0; r < reduced.rows(); ++r) column[static_cast<std::size_t>(r)] = reduced(r, d);
    scores[static_cast<std::size_t>(d)] = estimate_mutual_information(column, labels, bins);
  }
  return scores;
}

namespace {

double round_half_even(double q) {
  const double fl = std::floor(q);
  const double frac = q - fl;
  if (frac > 0.5) return fl + 1.0;
  if (frac < 0.5) return fl;
  return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

}  // namespace

BitAllocation allocate_bits(std::span<const double> scores, std::size_t total_bits) {
  const std::size_t d = scores.size();
  if (d == 0) throw Error("allocate_bits needs at least one component");
  double sum = 0.0;
  for (double v : scores) {
    if (!std::isfinite(v) || v < 0.0) throw Error("importance scores must be finite and >= 0");
    sum += v;
  }

  BitAllocation out;
  out.total = total_bits;
  out.bits.assign(d, 0);

  if (!(sum > 0.0)) {
    for (std::size_t i = 0; i < d; ++i) {
      out.bits[i] = total_bits / d + (i < total_bits % d ? 1 : 0);
    }
    return out;
  }

  const double budget = static_cast<double>(total_bits);
  std::vector<double> share(d);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < d; ++i) {
    share[i] = budget * scores[i] / sum;
    out.bits[i] = static_cast<std::size_t>(round_half_even(share[i]));
    assigned += out.bits[i];
  }

  while (assigned < total_bits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < d; ++i) {
      if (share[i] - static_cast<double>(out.bits[i]) >
          share[best] - static_cast<double>(out.bits[best])) {
        best = i;
      }
    }
    ++out.bits[best];
    ++assigned;
  }
  while (assigned > total_bits) {
    std::size_t best = d;
    for (std::size_t i = 0; i < d; ++i) {
      if (out.bits[i] == 0) continue;
      // >= so the highest index among equal surpluses gives up the bit.
      if (best == d || static_cast<double>(out.bits[i]) - share[i] >=
                           static_cast<double>(out.bits[best]) - share[best]) {
        best = i;
      }
    }
    --out.bits[best];
    --assigned;
  }
  return out;
}

CopulaModel fit_copula(const Matrix& normalized_train) {
  if (normalized_train.rows() < 1) throw Error("fit_copula needs at least one sample");
  CopulaModel model;
  model.sorted_columns.resize(static_cast<std::size_t>(normalized_train.cols()));
  for (Eigen::Index d = 0; d < normalized_train.cols(); ++d) {
    auto& column = model.sorted_columns[static_cast<std::size_t>(d)];
    column.resize(static_cast<std::size_t>(normalized_train.rows()));
    for (Eigen::Index r = 0; r < normalized_train.rows(); ++r) {
      column[static_cast<std::size_t>(r)] = normalized_train(r, d);
    }
    std::sort(column.begin(), column.end());
  }
  return model;
}

double apply_copula(const CopulaModel& copula, double value, std::size_t component) {
  if (component >= copula.sorted_columns.size()) throw Error("copula component out of range");
  const auto& column = copula.sorted_columns[component];
  const auto at_or_below = std::upper_bound(column.begin(), column.end(), value) - column.begin();
  return static_cast<double>(at_or_below) / static_cast<double>(column.size() + 1);
}

std::uint64_t discretize_value(double x, unsigned bits) {
  if (bits > 63) throw Error("discretize_value supports at most 63 bits");
  if (bits == 0) return 0;
  x = std::clamp(x, 0.0, 1.0);
  const std::uint64_t top = (std::uint64_t{1} << bits) - 1;
  const auto code = static_cast<std::uint64_t>(std::floor(std::ldexp(x, static_cast<int>(bits))));
  return std::min(code, top);
}

Matrix normalize(const Matrix& reduced, const Vector& mins, const Vector& maxs) {
  Matrix out(reduced.rows(), reduced.cols());
  for (Eigen::Index d = 0; d < reduced.cols(); ++d) {
    const double lo = mins[d];
    const double span = maxs[d] - mins[d];
    for (Eigen::Index r = 0; r < reduced.rows(); ++r) {
      out(r, d) = span > 0.0 ? std::clamp((reduced(r, d) - lo) / span, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

EncoderBasis fit_encoder_basis(const Dataset& train, const ReducerSpec& spec,
                               const EncoderOptions& options) {
  EncoderBasis basis;
  basis.reducer = fit_reducer(spec, train.features);
  const Matrix reduced = transform(basis.reducer, train.features);
  basis.importances = importance_scores(reduced, train.labels, options.mi_bins);
  basis.mins = reduced.colwise().minCoeff().transpose();
  basis.maxs = reduced.colwise().maxCoeff().transpose();
  basis.copula = fit_copula(normalize(reduced, basis.mins, basis.maxs));
  return basis;
}

EncoderModel with_budget(const EncoderBasis& basis, std::size_t total_bits) {
  if (total_bits < 1) throw Error("qubit budget must be at least 1");
  EncoderModel model;
  model.reducer = basis.reducer;
  model.mins = basis.mins;
  model.maxs = basis.maxs;
  model.copula = basis.copula;
  model.importances = basis.importances;
  model.allocation = allocate_bits(basis.importances, total_bits);
  return model;
}

EncoderModel fit_encoder(const Dataset& train, const ReducerSpec& spec, std::size_t total_bits,
                         const EncoderOptions& options) {
  if (total_bits < 1) throw Error("qubit budget must be at least 1");
  return with_budget(fit_encoder_basis(train, spec, options), total_bits);
}

Matrix copula_values(const FittedReducer& reducer, const Vector& mins, const Vector& maxs,
                     const CopulaModel& copula, const Matrix& features) {
  Matrix u = normalize(transform(reducer, features), mins, maxs);
  for (Eigen::Index d = 0; d < u.cols(); ++d) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      u(r, d) = apply_copula(copula, u(r, d), static_cast<std::size_t>(d));
    }
  }
  return u;
}

std::vector<Bitstring> discretize_rows(const Matrix& uniform_values, const BitAllocation& allocation) {
  if (static_cast<std::size_t>(uniform_values.cols()) != allocation.bits.size()) {
    throw DataError("allocation length does not match component count");
  }
  std::vector<Bitstring> out;
  out.reserve(static_cast<std::size_t>(uniform_values.rows()));
  for (Eigen::Index r = 0; r < uniform_values.rows(); ++r) {
    BitstringWriter writer(allocation.total);
    for (std::size_t d = 0; d < allocation.bits.size(); ++d) {
      if (allocation.bits[d] > 0) {
        writer.append_fraction(uniform_values(r, static_cast<Eigen::Index>(d)), allocation.bits[d]);
      }
    }
    out.push_back(writer.finish());
  }
  return out;
}

std::vector<Bitstring> encode_samples(const EncoderModel& model, const Matrix& features) {
  return discretize_rows(copula_values(model.reducer, model.mins, model.maxs, model.copula, features),
                         model.allocation);
}

nlohmann::json to_json(const EncoderModel& m) {
  nlohmann::json j;
  j["version"] = std::to_string(kModelSchemaVersion);
  j["reducer"] = to_json(m.reducer);
  j["mins"] = std::vector<double>(m.mins.begin(), m.mins.end());
  j["maxs"] = std::vector<double>(m.maxs.begin(), m.maxs.end());
  j["copula"] = m.copula.sorted_columns;
  j["importances"] = m.importances;
  j["allocation"] = m.allocation.bits;
  j["n_x"] = m.allocation.total;
  return j;
}

EncoderModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version")) throw DataError("encoder model has no version field");
  const auto& version = j.at("version");
  const std::string text = version.is_string() ? version.get<std::string>() : version.dump();
  if (text != std::to_string(kModelSchemaVersion)) {
    throw VersionError("encoder model version '" + text + "' is not supported (reader version " +
                       std::to_string(kModelSchemaVersion) + ")");
  }
  try {
    EncoderModel m;
    m.reducer = reducer_from_json(j.at("reducer"));
    const auto mins = j.at("mins").get<std::vector<double>>();
    const auto maxs = j.at("maxs").get<std::vector<double>>();
    m.mins = Eigen::Map<const Vector>(mins.data(), static_cast<Eigen::Index>(mins.size()));
    m.maxs = Eigen::Map<const Vector>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
    m.copula.sorted_columns = j.at("copula").get<std::vector<std::vector<double>>>();
    m.importances = j.at("importances").get<std::vector<double>>();
    m.allocation.bits = j.at("allocation").get<std::vector<std::size_t>>();
    m.allocation.total = j.at("n_x").get<std::size_t>();

    const std::size_t d = m.reducer.output_dim();
    const std::size_t bit_sum =
        std::accumulate(m.allocation.bits.begin(), m.allocation.bits.end(), std::size_t{0});
    if (mins.size() != d || maxs.size() != d || m.copula.sorted_columns.size() != d ||
        m.importances.size() != d || m.allocation.bits.size() != d || bit_sum != m.allocation.total) {
      throw DataError("encoder model fields have inconsistent lengths");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed encoder model: ") + e.what());
  }
}

void persist_model(const EncoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json(model).dump() << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

EncoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace bitbit
