#include "optknn/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "optknn/error.hpp"
#include "optknn/simd/distance_kernels.hpp"

namespace optknn {

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vectors of length " + std::to_string(x.size()) +
                                                  " and " + std::to_string(y.size()));
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double diff = x[p] - y[p];
    acc = acc + diff * diff;
  }
  return std::sqrt(acc);
}

namespace {

struct Scaling {
  std::vector<double> center;
  std::vector<double> scale;
};

Scaling identity_scaling(Index dims) {
  return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
}

Scaling union_scaling(const Dataset& dataset, std::span<const Index> a, std::span<const Index> b) {
  IndexList units(a.begin(), a.end());
  units.insert(units.end(), b.begin(), b.end());
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());

  const Index dims = dataset.dims();
  Scaling s = identity_scaling(dims);
  if (units.size() < 2) return s;
  const auto& x = dataset.covariates();
  const double n = static_cast<double>(units.size());
  for (Index p = 0; p < dims; ++p) {
    double sum = 0.0;
    for (Index i : units) sum += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
    const double mean = sum / n;
    double ss = 0.0;
    for (Index i : units) {
      const double d = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    s.center[p] = mean;
    if (sd > 0.0) s.scale[p] = sd;
  }
  return s;
}

void check_indices(const Dataset& dataset, std::span<const Index> indices, const char* what) {
  for (Index i : indices) {
    if (i >= dataset.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(what) + " index " + std::to_string(i) + " out of range");
    }
  }
  IndexList sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " indices must be distinct");
  }
}

std::vector<int> tally(const IndexList& pool, const std::vector<IndexList>& matches) {
  Index max_index = 0;
  for (Index j : pool) max_index = std::max(max_index, j);
  std::vector<int> position(pool.empty() ? 0 : max_index + 1, -1);
  for (std::size_t m = 0; m < pool.size(); ++m) position[pool[m]] = static_cast<int>(m);
  std::vector<int> counts(pool.size(), 0);
  for (const auto& list : matches) {
    for (Index j : list) ++counts[static_cast<std::size_t>(position[j])];
  }
  return counts;
}

}  // namespace

MatchSet find_matches(const Dataset& dataset, std::span<const Index> query_indices,
                      std::span<const Index> pool_indices, int k, bool standardize) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  check_indices(dataset, query_indices, "query");
  check_indices(dataset, pool_indices, "pool");
  const auto kk = static_cast<std::size_t>(k);
  if (kk > pool_indices.size()) {
    throw Error(ErrorCode::InsufficientPool, "k = " + std::to_string(k) + " exceeds pool of " +
                                                 std::to_string(pool_indices.size()));
  }

  MatchSet result;
  result.k = k;
  result.query_indices.assign(query_indices.begin(), query_indices.end());
  result.pool_indices.assign(pool_indices.begin(), pool_indices.end());
  result.match_counts.assign(pool_indices.size(), 0);
  if (query_indices.empty()) return result;

  const Index dims = dataset.dims();
  const Index pool_size = pool_indices.size();
  const Scaling scaling = standardize ? union_scaling(dataset, query_indices, pool_indices)
                                      : identity_scaling(dims);
  const auto& x = dataset.covariates();

  // Dimension-major copy of the pool for the distance kernel.
  std::vector<double> block(dims * pool_size);
  for (Index p = 0; p < dims; ++p) {
    for (Index m = 0; m < pool_size; ++m) {
      const double v = x(static_cast<Eigen::Index>(pool_indices[m]), static_cast<Eigen::Index>(p));
      block[p * pool_size + m] = standardize ? (v - scaling.center[p]) / scaling.scale[p] : v;
    }
  }

  std::vector<double> query(dims);
  std::vector<double> dist2(pool_size);
  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(pool_size);
  result.matches.reserve(query_indices.size());

  for (Index q : query_indices) {
    for (Index p = 0; p < dims; ++p) {
      const double v = x(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
      query[p] = standardize ? (v - scaling.center[p]) / scaling.scale[p] : v;
    }
    simd::squared_distances(query, block.data(), pool_size, pool_size, dist2.data());

    candidates.clear();
    for (Index m = 0; m < pool_size; ++m) {
      if (pool_indices[m] != q) candidates.emplace_back(dist2[m], m);
    }
    if (candidates.size() < kk) {
      throw Error(ErrorCode::InsufficientPool,
                  "unit " + std::to_string(q) + " has only " + std::to_string(candidates.size()) +
                      " candidates for k = " + std::to_string(k));
    }
    // Order by squared distance, then by dataset index.
    const auto closer = [&](const std::pair<double, Index>& a, const std::pair<double, Index>& b) {
      if (a.first != b.first) return a.first < b.first;
      return pool_indices[a.second] < pool_indices[b.second];
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(kk),
                      candidates.end(), closer);

    IndexList list(kk);
    for (std::size_t r = 0; r < kk; ++r) {
      list[r] = pool_indices[candidates[r].second];
      ++result.match_counts[candidates[r].second];
    }
    result.matches.push_back(std::move(list));
  }
  return result;
}

MatchSet MatchSet::prefix(int k_prefix) const {
  if (k_prefix < 1 || k_prefix > k) {
    throw Error(ErrorCode::InvalidArgument,
                "prefix length " + std::to_string(k_prefix) + " outside 1.." + std::to_string(k));
  }
  MatchSet out;
  out.k = k_prefix;
  out.query_indices = query_indices;
  out.pool_indices = pool_indices;
  out.matches.reserve(matches.size());
  for (const auto& list : matches) {
    out.matches.emplace_back(list.begin(), list.begin() + k_prefix);
  }
  out.match_counts = tally(out.pool_indices, out.matches);
  return out;
}

std::vector<int> MatchSet::counts_by_unit(Index n_units) const {
  std::vector<int> counts(n_units, 0);
  for (std::size_t m = 0; m < pool_indices.size(); ++m) counts[pool_indices[m]] = match_counts[m];
  return counts;
}

MatchSet match_treated_to_controls(const Dataset& dataset, int k) {
  return find_matches(dataset, dataset.treated(), dataset.controls(), k);
}

MatchSet match_controls_to_treated(const Dataset& dataset, int k) {
  return find_matches(dataset, dataset.controls(), dataset.treated(), k);
}

SameArmNeighbors SameArmNeighbors::prefix(int k_prefix) const {
  return {treated.prefix(k_prefix), controls.prefix(k_prefix)};
}

SameArmNeighbors find_same_arm_neighbors(const Dataset& dataset, int k) {
  return {find_matches(dataset, dataset.treated(), dataset.treated(), k),
          find_matches(dataset, dataset.controls(), dataset.controls(), k)};
}

}  // namespace optknn
