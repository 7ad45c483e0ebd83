#pragma once

#include <span>
#include <vector>

#include "optknn/dataset.hpp"

namespace optknn {

// Plain Euclidean norm of x - y.
double euclidean_distance(std::span<const double> x, std::span<const double> y);

// k-nearest-neighbour matches with replacement.
//
// matches[q] holds the k pool units closest to query_indices[q], sorted by
// (distance, dataset index). match_counts[m] is the number of times
// pool_indices[m] appears across all lists.
struct MatchSet {
  IndexList query_indices;
  IndexList pool_indices;
  std::vector<IndexList> matches;
  std::vector<int> match_counts;
  int k = 0;

  // The same search truncated to the first k' <= k neighbours of every query.
  MatchSet prefix(int k_prefix) const;
  // Match counts indexed by dataset unit (zero for units outside the pool).
  std::vector<int> counts_by_unit(Index n_units) const;
};

// Brute-force search. A query unit never matches itself. When `standardize`
// is set, each covariate is z-scored with the mean and standard deviation
// of the union of query and pool units before distances are taken.
// Throws InsufficientPool when fewer than k candidates remain for a query.
MatchSet find_matches(const Dataset& dataset, std::span<const Index> query_indices,
                      std::span<const Index> pool_indices, int k, bool standardize = false);

// Treated units matched to controls, controls matched to treated units.
MatchSet match_treated_to_controls(const Dataset& dataset, int k);
MatchSet match_controls_to_treated(const Dataset& dataset, int k);

// Same-arm neighbourhoods L_k: each unit's k closest units with the same
// treatment, itself excluded.
struct SameArmNeighbors {
  MatchSet treated;
  MatchSet controls;

  SameArmNeighbors prefix(int k_prefix) const;
};
SameArmNeighbors find_same_arm_neighbors(const Dataset& dataset, int k);

}  // namespace optknn
