#include "bitbit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "bitbit/error.hpp"
#include "bitbit/random.hpp"
#include "csv.hpp"

namespace bitbit {

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.class_names = class_names;
  return out;
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
  return detail::split_csv_line(line);
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
  const auto header = detail::split_csv_line(line);
  const std::size_t label_index = detail::resolve_column(header, label_column);
  const std::size_t n = header.size() - 1;
  if (n == 0) throw DataError("'" + path.string() + "' has no feature columns");

  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index) d.feature_names.push_back(header[c]);
  }

  std::vector<double> values;
  std::unordered_map<std::string, int> label_ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_index) continue;
      double v = 0.0;
      if (!detail::parse_real(fields[c], v) || !std::isfinite(v)) {
        throw DataError(detail::cell_error(row, c, header[c], fields[c]));
      }
      values.push_back(v);
    }
    const std::string& label = fields[label_index];
    if (label.empty()) {
      throw DataError("row " + std::to_string(row) + ": missing label");
    }
    auto [it, inserted] = label_ids.try_emplace(label, static_cast<int>(d.class_names.size()));
    if (inserted) d.class_names.push_back(label);
    d.labels.push_back(it->second);
  }

  if (row < 2) throw DataError("'" + path.string() + "' has fewer than 2 samples");
  if (d.class_names.size() < 2) throw DataError("fewer than 2 classes");

  d.num_classes = static_cast<int>(d.class_names.size());
  d.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(row),
                                  static_cast<Eigen::Index>(n));
  return d;
}

std::vector<std::string> validate(const Dataset& d) {
  std::vector<std::string> issues;
  const std::size_t s = d.num_samples();
  const std::size_t n = d.num_features();
  if (s < 2) issues.push_back("fewer than 2 samples");
  if (n < 1) issues.push_back("no features");
  if (d.num_classes < 2) issues.push_back("fewer than 2 classes");
  if (d.labels.size() != s) {
    issues.push_back("label count " + std::to_string(d.labels.size()) + " != sample count " +
                     std::to_string(s));
  }
  if (!d.feature_names.empty() && d.feature_names.size() != n) {
    issues.push_back("feature name count does not match feature count");
  }

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t bad = 0;
    for (std::size_t r = 0; r < s; ++r) {
      if (!std::isfinite(d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)))) {
        ++bad;
      }
    }
    if (bad > 0) {
      const std::string name =
          c < d.feature_names.size() ? d.feature_names[c] : "#" + std::to_string(c);
      issues.push_back("feature '" + name + "' has " + std::to_string(bad) +
                       " non-finite value(s)");
    }
  }

  std::vector<std::size_t> seen(static_cast<std::size_t>(std::max(d.num_classes, 0)), 0);
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    const int y = d.labels[i];
    if (y < 0 || y >= d.num_classes) {
      issues.push_back("label " + std::to_string(y) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(d.num_classes) + ")");
    } else {
      ++seen[static_cast<std::size_t>(y)];
    }
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k] == 0) issues.push_back("class " + std::to_string(k) + " absent");
  }
  return issues;
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
  }
}

std::size_t train_count(std::size_t s, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("train fraction must lie in (0, 1)");
  }
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(s)));
}

}  // namespace

SplitIndices split_indices(const std::vector<int>& labels, const SplitSpec& spec) {
  const std::size_t s = labels.size();
  const std::size_t n_train = train_count(s, spec.train_fraction);
  if (n_train < 1 || n_train >= s) {
    throw DataError("split of " + std::to_string(s) + " samples at fraction " +
                    std::to_string(spec.train_fraction) + " leaves an empty side");
  }

  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  shuffle(order, rng);

  SplitIndices out;
  if (!spec.stratified) {
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
  }

  // Per-class quota of floor(fraction * class size), taking rows in
  // permutation order so each side keeps the shuffled order.
  std::map<int, std::size_t> class_size;
  for (int y : labels) ++class_size[y];
  std::map<int, std::size_t> taken;
  for (std::size_t idx : order) {
    const int y = labels[idx];
    const std::size_t quota = train_count(class_size[y], spec.train_fraction);
    if (taken[y] < quota) {
      ++taken[y];
      out.train.push_back(idx);
    } else {
      out.test.push_back(idx);
    }
  }
  if (out.train.empty() || out.test.empty()) {
    throw DataError("stratified split leaves an empty side");
  }
  return out;
}

TrainTestSplit split_train_test(const Dataset& d, const SplitSpec& spec) {
  TrainTestSplit out;
  out.indices = split_indices(d.labels, spec);
  out.train = d.subset(out.indices.train);
  out.test = d.subset(out.indices.test);

  auto flag_missing = [&](const Dataset& part, const char* side) {
    std::vector<bool> present(static_cast<std::size_t>(d.num_classes), false);
    for (int y : part.labels) present[static_cast<std::size_t>(y)] = true;
    for (std::size_t k = 0; k < present.size(); ++k) {
      if (!present[k]) {
        out.warnings.push_back(std::string("class ") + std::to_string(k) + " absent from " + side +
                               " split");
      }
    }
  };
  flag_missing(out.train, "train");
  flag_missing(out.test, "test");
  return out;
}

Dataset make_synthetic(std::size_t s, std::size_t n, int c, double separation,
                       std::uint64_t seed) {
  if (c < 1 || s < static_cast<std::size_t>(c)) {
    throw DataError("make_synthetic needs s >= c >= 1");
  }
  Dataset d;
  d.num_classes = c;
  d.features.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n));
  d.labels.resize(s);
  Rng rng(seed);
  for (std::size_t r = 0; r < s; ++r) {
    const int y = static_cast<int>(r % static_cast<std::size_t>(c));
    d.labels[r] = y;
    for (std::size_t f = 0; f < n; ++f) {
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          separation * y + rng.normal();
    }
  }
  for (std::size_t f = 0; f < n; ++f) d.feature_names.push_back("x" + std::to_string(f));
  for (int k = 0; k < c; ++k) d.class_names.push_back(std::to_string(k));
  return d;
}

std::size_t count_conflicting_duplicates(const Dataset& d) {
  std::map<std::vector<double>, std::vector<int>> rows;
  for (std::size_t r = 0; r < d.num_samples(); ++r) {
    const auto row = d.features.row(static_cast<Eigen::Index>(r));
    auto& ys = rows[std::vector<double>(row.begin(), row.end())];
    if (std::find(ys.begin(), ys.end(), d.labels[r]) == ys.end()) ys.push_back(d.labels[r]);
  }
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const auto& kv) { return kv.second.size() > 1; }));
}

}  // namespace bitbit
