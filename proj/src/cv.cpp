#include "optknn/cv.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "optknn/error.hpp"
#include "optknn/matching.hpp"
#include "optknn/rng.hpp"
#include "optknn/transform.hpp"

namespace optknn {

IndexList FoldAssignment::members(int fold) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

IndexList FoldAssignment::complement(int fold) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

namespace {

void shuffle(IndexList& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

struct FoldSplit {
  IndexList test_treated, test_controls, train_treated, train_controls;
};

FoldSplit split(const Dataset& dataset, const FoldAssignment& folds, int g) {
  FoldSplit s;
  for (Index i = 0; i < dataset.size(); ++i) {
    const bool test = folds.fold_of[i] == g;
    const bool treated = dataset.treatment(i) == 1;
    (test ? (treated ? s.test_treated : s.test_controls) : (treated ? s.train_treated : s.train_controls))
        .push_back(i);
  }
  return s;
}

}  // namespace

FoldAssignment stratified_folds(const Dataset& dataset, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  const auto g = static_cast<std::size_t>(folds);
  if (dataset.n_treated() < g || dataset.n_control() < g) {
    throw Error(ErrorCode::InfeasibleStratification,
                std::to_string(folds) + " folds need at least that many units per arm (N1 = " +
                    std::to_string(dataset.n_treated()) + ", N0 = " + std::to_string(dataset.n_control()) + ")");
  }
  FoldAssignment out;
  out.folds = folds;
  out.seed = seed;
  out.fold_of.assign(dataset.size(), -1);

  Rng rng(seed);
  IndexList treated = dataset.treated();
  IndexList controls = dataset.controls();
  shuffle(treated, rng);
  shuffle(controls, rng);
  for (std::size_t r = 0; r < treated.size(); ++r) out.fold_of[treated[r]] = static_cast<int>(r % g);
  const std::size_t offset = treated.size() % g;
  for (std::size_t r = 0; r < controls.size(); ++r) {
    out.fold_of[controls[r]] = static_cast<int>((offset + r) % g);
  }
  return out;
}

int max_feasible_cv_k(const Dataset& dataset, const FoldAssignment& folds, Estimand estimand) {
  int best = max_feasible_k(dataset, estimand);
  for (int g = 0; g < folds.folds; ++g) {
    const FoldSplit s = split(dataset, folds, g);
    best = std::min(best, static_cast<int>(s.train_controls.size()));
    if (estimand == Estimand::ATE) best = std::min(best, static_cast<int>(s.train_treated.size()));
  }
  return best;
}

int argmin_k(const std::vector<int>& k_grid, const std::vector<double>& mse) {
  if (k_grid.empty() || k_grid.size() != mse.size()) {
    throw Error(ErrorCode::InvalidArgument, "k grid and objective values must be non-empty and aligned");
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < mse.size(); ++j) {
    if (mse[j] < mse[best] || (mse[j] == mse[best] && k_grid[j] < k_grid[best])) best = j;
  }
  return k_grid[best];
}

CvResult cv_curve(const Dataset& dataset, const FoldAssignment& folds, int k_max, Estimand estimand,
                  const PropensityModel& propensity, const CvOptions& options) {
  if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (folds.fold_of.size() != dataset.size()) {
    throw Error(ErrorCode::DimensionMismatch, "fold assignment does not cover the dataset");
  }
  if (!options.refit_propensity_per_fold && propensity.fitted.size() != dataset.size()) {
    throw Error(ErrorCode::DimensionMismatch, "propensity model must carry one fitted value per unit");
  }
  const int feasible = max_feasible_cv_k(dataset, folds, estimand);
  if (k_max > feasible) {
    throw Error(ErrorCode::InfeasibleK,
                "k = " + std::to_string(k_max) + " exceeds the feasible maximum " + std::to_string(feasible));
  }

  const Dataset scaled = options.estimator.standardize ? dataset.standardized() : Dataset(dataset);
  const int order = options.estimator.series_order;
  const auto n_folds = static_cast<std::size_t>(folds.folds);

  CvResult result;
  for (int k = 1; k <= k_max; ++k) result.k_grid.push_back(k);
  result.per_fold_estimates.assign(n_folds, std::vector<double>(static_cast<std::size_t>(k_max), 0.0));
  result.per_fold_targets.assign(n_folds, 0.0);

  for (int g = 0; g < folds.folds; ++g) {
    const FoldSplit s = split(dataset, folds, g);
    if (s.test_treated.empty()) throw Error(ErrorCode::NoTreated, "fold " + std::to_string(g) + " has no treated units");

    // Fold target: mean transformed outcome over every test unit, with the
    // test fold's treated share as the marginal probability.
    const IndexList test = folds.members(g);
    std::vector<double> p_test(test.size());
    if (options.refit_propensity_per_fold) {
      const PropensityModel local = fit_logit(dataset, folds.complement(g), options.logit);
      for (std::size_t t = 0; t < test.size(); ++t) {
        const auto row = dataset.row(test[t]);
        p_test[t] = predict_propensity(local, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      }
    } else {
      for (std::size_t t = 0; t < test.size(); ++t) p_test[t] = propensity.fitted[test[t]];
    }
    const double share = static_cast<double>(s.test_treated.size()) / static_cast<double>(test.size());
    double target = 0.0;
    for (std::size_t t = 0; t < test.size(); ++t) {
      const Index i = test[t];
      target += estimand == Estimand::ATET
                    ? transformed_outcome_atet(dataset.outcome(i), dataset.treatment(i), p_test[t], share)
                    : transformed_outcome_ate(dataset.outcome(i), dataset.treatment(i), p_test[t]);
    }
    result.per_fold_targets[static_cast<std::size_t>(g)] = target / static_cast<double>(test.size());

    const MatchSet t2c = find_matches(scaled, s.test_treated, s.train_controls, k_max);
    const OutcomeRegression mu0 = fit_outcome_regression(dataset, Arm::Control, s.train_controls, order);
    auto& row = result.per_fold_estimates[static_cast<std::size_t>(g)];
    if (estimand == Estimand::ATET) {
      for (int k = 1; k <= k_max; ++k) {
        const MatchSet m = t2c.prefix(k);
        row[static_cast<std::size_t>(k - 1)] = matching_atet(dataset, m) - bias_atet(dataset, m, mu0);
      }
    } else {
      if (s.test_controls.empty()) throw Error(ErrorCode::InsufficientData, "fold " + std::to_string(g) + " has no control units");
      const MatchSet c2t = find_matches(scaled, s.test_controls, s.train_treated, k_max);
      const OutcomeRegression mu1 = fit_outcome_regression(dataset, Arm::Treated, s.train_treated, order);
      for (int k = 1; k <= k_max; ++k) {
        const MatchSet mt = t2c.prefix(k);
        const MatchSet mc = c2t.prefix(k);
        row[static_cast<std::size_t>(k - 1)] = matching_ate(dataset, mt, mc) - bias_ate(dataset, mt, mc, mu0, mu1);
      }
    }
  }

  result.mse.assign(static_cast<std::size_t>(k_max), 0.0);
  for (std::size_t j = 0; j < result.mse.size(); ++j) {
    double sum = 0.0;
    for (std::size_t g = 0; g < n_folds; ++g) {
      const double gap = result.per_fold_estimates[g][j] - result.per_fold_targets[g];
      sum += gap * gap;
    }
    result.mse[j] = sum / static_cast<double>(n_folds);
  }
  result.k_star = argmin_k(result.k_grid, result.mse);
  return result;
}

double cv_objective(const Dataset& dataset, const FoldAssignment& folds, int k, Estimand estimand,
                    const PropensityModel& propensity, const CvOptions& options) {
  return cv_curve(dataset, folds, k, estimand, propensity, options).mse.back();
}

Selection select_k(const Dataset& dataset, int folds, int k_max, Estimand estimand, std::uint64_t seed,
                   double alpha, const CvOptions& options) {
  Selection out;
  out.propensity = fit_logit(dataset, options.logit);
  const FoldAssignment assignment = stratified_folds(dataset, folds, seed);
  out.cv = cv_curve(dataset, assignment, k_max, estimand, out.propensity, options);
  out.estimate = bias_corrected_effect(dataset, out.cv.k_star, estimand, alpha, options.estimator);
  return out;
}

}  // namespace optknn
