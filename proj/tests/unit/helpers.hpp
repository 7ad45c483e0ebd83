#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "optknn/dataset.hpp"

namespace testing {

using optknn::Dataset;
using optknn::Index;
using optknn::RowMatrix;

// Random design with both arms guaranteed. Covariates uniform on [0, 1).
inline Dataset random_dataset(std::mt19937_64& gen, Index n, Index p, double treat_share = 0.5) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  RowMatrix x(n, p);
  std::vector<int> d(n);
  std::vector<double> y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = u(gen);
    d[i] = u(gen) < treat_share ? 1 : 0;
  }
  d[0] = 1;
  d[1] = 0;
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Index j = 0; j < p; ++j) s += (j + 1.0) * x(i, j);
    y[i] = 1.0 + s + 0.5 * d[i] + noise(gen);
  }
  return Dataset(std::move(x), std::move(d), std::move(y));
}

// Squared distance in long double, summed in reverse order.
inline long double sq_dist(const Dataset& ds, Index a, Index b) {
  long double s = 0.0L;
  for (Index j = ds.dims(); j-- > 0;) {
    const long double diff = static_cast<long double>(ds.covariates()(a, j)) - ds.covariates()(b, j);
    s += diff * diff;
  }
  return s;
}

// Sort-everything neighbour oracle: candidates from `pool` other than `q`,
// ordered by (distance, index), first k kept.
inline std::vector<Index> knn_oracle(const Dataset& ds, Index q, const std::vector<Index>& pool, int k) {
  std::vector<std::pair<long double, Index>> all;
  for (Index m : pool) {
    if (m != q) all.emplace_back(sq_dist(ds, q, m), m);
  }
  std::sort(all.begin(), all.end());
  std::vector<Index> out;
  for (int i = 0; i < k; ++i) out.push_back(all[static_cast<std::size_t>(i)].second);
  return out;
}

inline std::vector<Index> arm(const Dataset& ds, int d) {
  std::vector<Index> out;
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.treatment(i) == d) out.push_back(i);
  }
  return out;
}

// Solves the normal equations (X'X) b = X'y by Gauss-Jordan elimination
// with partial pivoting, no library linear algebra.
inline std::vector<double> ols_oracle(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
  const std::size_t c = rows.front().size();
  std::vector<std::vector<long double>> a(c, std::vector<long double>(c + 1, 0.0L));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j) a[i][j] += static_cast<long double>(rows[r][i]) * rows[r][j];
      a[i][c] += static_cast<long double>(rows[r][i]) * y[r];
    }
  }
  for (std::size_t col = 0; col < c; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < c; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < c; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= c; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> b(c);
  for (std::size_t i = 0; i < c; ++i) b[i] = static_cast<double>(a[i][c] / a[i][i]);
  return b;
}

inline std::vector<double> affine_fit(const Dataset& ds, const std::vector<Index>& units) {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (Index i : units) {
    std::vector<double> r{1.0};
    for (Index j = 0; j < ds.dims(); ++j) r.push_back(ds.covariates()(i, j));
    rows.push_back(r);
    y.push_back(ds.outcome(i));
  }
  return ols_oracle(rows, y);
}

inline double affine_predict(const std::vector<double>& b, const Dataset& ds, Index i) {
  double s = b[0];
  for (Index j = 0; j < ds.dims(); ++j) s += b[j + 1] * ds.covariates()(i, j);
  return s;
}

}  // namespace testing
