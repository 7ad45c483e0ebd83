#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "optknn/dataset.hpp"
#include "optknn/estimator.hpp"
#include "optknn/propensity.hpp"

namespace optknn {

struct FoldAssignment {
  std::vector<int> fold_of;
  int folds = 0;
  std::uint64_t seed = 0;

  IndexList members(int fold) const;
  IndexList complement(int fold) const;
};

// Treated and control indices are shuffled separately and dealt round-robin,
// so per-arm fold sizes differ by at most one. Control dealing starts at the
// fold after the last treated unit, which also keeps total fold sizes within
// one of each other. Throws InfeasibleStratification when an arm has fewer
// than `folds` units.
FoldAssignment stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed);

struct CvOptions {
  EstimatorOptions estimator;
  // Refit the propensity model on each training fold instead of using the
  // full-sample fit for the fold targets.
  bool refit_propensity_per_fold = false;
  LogitOptions logit;
};

struct CvResult {
  std::vector<int> k_grid;
  std::vector<double> mse;
  int k_star = 0;
  // per_fold_estimates[g][j] is the fold-g bias-corrected estimate at k_grid[j].
  std::vector<std::vector<double>> per_fold_estimates;
  std::vector<double> per_fold_targets;
};

// Objective values for k = 1..k_max over fixed folds. Test-fold units are
// matched only against training-fold units of the opposite arm.
CvResult cv_curve(const Dataset& dataset, const FoldAssignment& folds, int k_max,
                  Estimand estimand, const PropensityModel& propensity,
                  const CvOptions& options = {});

// (1/G) sum_g (fold estimate - fold mean transformed outcome)^2 at a single k.
double cv_objective(const Dataset& dataset, const FoldAssignment& folds, int k,
                    Estimand estimand, const PropensityModel& propensity,
                    const CvOptions& options = {});

// Largest k with enough opposite-arm training units in every fold.
int max_feasible_cv_k(const Dataset& dataset, const FoldAssignment& folds, Estimand estimand);

// Index of the smallest objective value; ties go to the smaller k.
int argmin_k(const std::vector<int>& k_grid, const std::vector<double>& mse);

struct Selection {
  CvResult cv;
  EffectEstimate estimate;
  PropensityModel propensity;
};

// Fits the propensity model, cross-validates k = 1..k_max and re-estimates
// the effect on the full sample at the selected k.
Selection select_k(const Dataset& dataset, int folds, int k_max, Estimand estimand,
                   std::uint64_t seed, double alpha = 0.05, const CvOptions& options = {});

}  // namespace optknn
