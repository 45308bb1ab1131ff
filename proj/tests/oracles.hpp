#pragma once

// Reference computations used only by the tests. They favour obviousness over
// speed and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Minority samples per bucket by direct O(s^2) scan over the sample list.
inline double train_incidence(const std::vector<std::string>& codes, const std::vector<int>& labels,
                              int num_classes) {
  std::size_t errors = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t j = 0; j < codes.size(); ++j) {
      if (codes[j] == codes[i]) ++counts[static_cast<std::size_t>(labels[j])];
    }
    int majority = 0;
    for (int k = 1; k < num_classes; ++k) {
      if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(majority)]) majority = k;
    }
    if (labels[i] != majority) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(codes.size());
}

struct TestOverlap {
  double incidence = 0.0;
  double overlap_fraction = 0.0;
};

// Per test sample: scan every training sample to decide overlap and majority.
inline TestOverlap test_incidence(const std::vector<std::string>& train_codes,
                                  const std::vector<int>& train_labels,
                                  const std::vector<std::string>& test_codes,
                                  const std::vector<int>& test_labels, int num_classes) {
  std::size_t errors = 0;
  std::size_t overlapping = 0;
  for (std::size_t i = 0; i < test_codes.size(); ++i) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    bool seen = false;
    for (std::size_t j = 0; j < train_codes.size(); ++j) {
      if (train_codes[j] == test_codes[i]) {
        seen = true;
        ++counts[static_cast<std::size_t>(train_labels[j])];
      }
    }
    if (!seen) continue;
    ++overlapping;
    int majority = 0;
    for (int k = 1; k < num_classes; ++k) {
      if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(majority)]) majority = k;
    }
    if (test_labels[i] != majority) ++errors;
  }
  const double n = static_cast<double>(test_codes.size());
  return {static_cast<double>(errors) / n, static_cast<double>(overlapping) / n};
}

// Batched rule: a test bitstring counts against all of its samples when its
// own majority label differs from the training majority.
inline double batched_test_incidence(const std::vector<std::string>& train_codes,
                                     const std::vector<int>& train_labels,
                                     const std::vector<std::string>& test_codes,
                                     const std::vector<int>& test_labels, int num_classes) {
  std::map<std::string, std::vector<std::size_t>> train, test;
  for (std::size_t j = 0; j < train_codes.size(); ++j) {
    auto& c = train[train_codes[j]];
    c.resize(static_cast<std::size_t>(num_classes));
    ++c[static_cast<std::size_t>(train_labels[j])];
  }
  for (std::size_t j = 0; j < test_codes.size(); ++j) {
    auto& c = test[test_codes[j]];
    c.resize(static_cast<std::size_t>(num_classes));
    ++c[static_cast<std::size_t>(test_labels[j])];
  }
  auto argmax = [](const std::vector<std::size_t>& c) {
    return static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
  };
  std::size_t errors = 0;
  for (const auto& [z, counts] : test) {
    auto it = train.find(z);
    if (it == train.end()) continue;
    if (argmax(counts) != argmax(it->second)) {
      for (auto c : counts) errors += c;
    }
  }
  return static_cast<double>(errors) / static_cast<double>(test_codes.size());
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n*n).
// Returns eigenvalues descending with matching unit eigenvectors as rows.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(
    std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  for (std::size_t idx : order) {
    values.push_back(a[idx][idx]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][idx];
    // largest-magnitude entry positive, first index on ties
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(col[k]) > std::abs(col[best])) best = k;
    if (col[best] < 0)
      for (double& x : col) x = -x;
    vectors.push_back(col);
  }
  return {values, vectors};
}

// Sample covariance of the rows of x (s x n), divided by s - 1.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& x) {
  const std::size_t s = x.size(), n = x[0].size();
  std::vector<double> mean(n, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < n; ++j) mean[j] += row[j] / static_cast<double>(s);
  std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
  for (const auto& row : x)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
  for (auto& r : c)
    for (double& e : r) e /= static_cast<double>(s - 1);
  return c;
}

struct SinusoidFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double max_residual = 0.0;
};

// Least-squares fit of a + b cos t + c sin t through (t_i, y_i), by the 3x3
// normal equations solved with Cramer's rule.
inline SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y) {
  double m[3][3] = {};
  double r[3] = {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f[3] = {1.0, std::cos(t[i]), std::sin(t[i])};
    for (int p = 0; p < 3; ++p) {
      r[p] += f[p] * y[i];
      for (int q = 0; q < 3; ++q) m[p][q] += f[p] * f[q];
    }
  }
  auto det = [](double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  double sol[3];
  for (int k = 0; k < 3; ++k) {
    double mk[3][3];
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) mk[p][q] = (q == k) ? r[p] : m[p][q];
    sol[k] = det(mk) / d;
  }
  SinusoidFit fit{sol[0], sol[1], sol[2], 0.0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double pred = fit.a + fit.b * std::cos(t[i]) + fit.c * std::sin(t[i]);
    fit.max_residual = std::max(fit.max_residual, std::abs(pred - y[i]));
  }
  return fit;
}

// Kolmogorov-Smirnov distance between the empirical CDF of `values` and U(0,1).
inline double ks_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

// Dense reference simulator: full 2^n x 2^n matrices built from Kronecker
// products, qubit q being bit q of the basis index.
using Cx = std::complex<double>;
using Dense = std::vector<std::vector<Cx>>;

inline Dense embed_single(std::size_t n, std::size_t q, const Cx g[2][2]) {
  const std::size_t dim = std::size_t{1} << n;
  Dense u(dim, std::vector<Cx>(dim, 0.0));
  for (std::size_t row = 0; row < dim; ++row) {
    for (std::size_t col = 0; col < dim; ++col) {
      if ((row & ~(std::size_t{1} << q)) != (col & ~(std::size_t{1} << q))) continue;
      u[row][col] = g[(row >> q) & 1][(col >> q) & 1];
    }
  }
  return u;
}

inline Dense ry_matrix(std::size_t n, std::size_t q, double theta) {
  const Cx g[2][2] = {{std::cos(theta / 2), -std::sin(theta / 2)},
                      {std::sin(theta / 2), std::cos(theta / 2)}};
  return embed_single(n, q, g);
}

inline Dense rz_matrix(std::size_t n, std::size_t q, double theta) {
  const Cx g[2][2] = {{std::polar(1.0, -theta / 2), 0.0}, {0.0, std::polar(1.0, theta / 2)}};
  return embed_single(n, q, g);
}

inline Dense cnot_matrix(std::size_t n, std::size_t control, std::size_t target) {
  const std::size_t dim = std::size_t{1} << n;
  Dense u(dim, std::vector<Cx>(dim, 0.0));
  for (std::size_t col = 0; col < dim; ++col) {
    const std::size_t row = ((col >> control) & 1) ? col ^ (std::size_t{1} << target) : col;
    u[row][col] = 1.0;
  }
  return u;
}

inline std::vector<Cx> apply(const Dense& u, const std::vector<Cx>& v) {
  std::vector<Cx> out(v.size(), 0.0);
  for (std::size_t r = 0; r < v.size(); ++r)
    for (std::size_t c = 0; c < v.size(); ++c) out[r] += u[r][c] * v[c];
  return out;
}

}  // namespace oracle
