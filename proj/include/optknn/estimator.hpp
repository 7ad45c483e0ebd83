#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "optknn/dataset.hpp"
#include "optknn/matching.hpp"

namespace optknn {

enum class Arm { Control, Treated };

// Least-squares series approximation of E[Y | X, D = arm]. Order 1 is affine
// in the covariates; order 2 appends the squared covariates.
class OutcomeRegression {
 public:
  OutcomeRegression(Eigen::VectorXd coefficients, Arm arm, int series_order);

  double predict(std::span<const double> x) const;
  double predict(const Dataset& dataset, Index unit) const;

  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  Arm arm() const { return arm_; }
  int series_order() const { return series_order_; }

 private:
  Eigen::VectorXd coefficients_;
  Arm arm_;
  int series_order_;
};

// OLS of Y on the series basis over `units`, all of which must belong to `arm`.
OutcomeRegression fit_outcome_regression(const Dataset& dataset, Arm arm,
                                         std::span<const Index> units, int series_order = 1);
OutcomeRegression fit_outcome_regression(const Dataset& dataset, Arm arm, int series_order = 1);

// (1/N1) sum over treated of Y_i - mean of matched control outcomes.
double matching_atet(const Dataset& dataset, const MatchSet& treated_to_controls);
// (1/N1) sum over treated of mu0(x_i) - mean of mu0 over matched controls.
double bias_atet(const Dataset& dataset, const MatchSet& treated_to_controls,
                 const OutcomeRegression& mu0);

// (1/N) sum of imputed Y(1) - Y(0), imputing the missing potential outcome
// from the opposite arm's matches.
double matching_ate(const Dataset& dataset, const MatchSet& treated_to_controls,
                    const MatchSet& controls_to_treated);
double bias_ate(const Dataset& dataset, const MatchSet& treated_to_controls,
                const MatchSet& controls_to_treated, const OutcomeRegression& mu0,
                const OutcomeRegression& mu1);

// sigma^2_i = k/(k+1) (Y_i - mean of Y over the k nearest same-arm units)^2.
std::vector<double> conditional_variance(const Dataset& dataset, int k);
std::vector<double> conditional_variance(const Dataset& dataset, const SameArmNeighbors& neighbors);

struct VarianceComponents {
  double v_e = 0.0;
  double v_delta = 0.0;
};

// v_e = (1/N1) sum_i (D_i + (1 - D_i) J_i / k)^2 sigma^2_i and v_delta the
// sample variance of mu1 - mu0 over treated units.
VarianceComponents variance_components_atet(const Dataset& dataset,
                                            const MatchSet& treated_to_controls,
                                            std::span<const double> sigma2,
                                            const OutcomeRegression& mu0,
                                            const OutcomeRegression& mu1);
// v_e = (1/N) sum_i (1 + J_i / k)^2 sigma^2_i and v_delta the sample variance
// of mu1 - mu0 over all units.
VarianceComponents variance_components_ate(const Dataset& dataset,
                                           const MatchSet& treated_to_controls,
                                           const MatchSet& controls_to_treated,
                                           std::span<const double> sigma2,
                                           const OutcomeRegression& mu0,
                                           const OutcomeRegression& mu1);

// point -/+ z_{1-alpha/2} sqrt(v_total / n_eff).
std::pair<double, double> confidence_interval(double point, double v_total, Index n_eff,
                                              double alpha);

struct EffectEstimate {
  Estimand estimand = Estimand::ATET;
  int k = 0;
  double raw = 0.0;
  double bias = 0.0;
  double point = 0.0;
  double v_e = 0.0;
  double v_delta = 0.0;
  Index n_eff = 0;
  double alpha = 0.05;
  double ci_low = 0.0;
  double ci_high = 0.0;

  double std_error() const;
  double ci_length() const { return ci_high - ci_low; }
};

struct EstimatorOptions {
  // z-score covariates with full-sample moments before every neighbour search.
  bool standardize = false;
  int series_order = 1;
};

// Neighbour searches and regressions done once at k_max; estimates for any
// k <= k_max reuse the prefixes of the k_max neighbour lists, which equals
// searching at k directly. Holds a pointer to `dataset`, which must outlive it.
class EffectPath {
 public:
  EffectPath(const Dataset& dataset, int k_max, Estimand estimand,
             const EstimatorOptions& options = {});

  EffectEstimate at(int k, double alpha) const;
  int k_max() const { return k_max_; }
  Estimand estimand() const { return estimand_; }
  const OutcomeRegression& mu0() const { return mu0_; }
  const OutcomeRegression& mu1() const { return mu1_; }
  const MatchSet& treated_to_controls() const { return treated_to_controls_; }

 private:
  const Dataset* dataset_;
  int k_max_;
  Estimand estimand_;
  MatchSet treated_to_controls_;
  MatchSet controls_to_treated_;
  SameArmNeighbors same_arm_;
  OutcomeRegression mu0_;
  OutcomeRegression mu1_;
};

// Largest k the full-sample estimator supports for this dataset.
int max_feasible_k(const Dataset& dataset, Estimand estimand);

EffectEstimate bias_corrected_effect(const Dataset& dataset, int k, Estimand estimand,
                                     double alpha = 0.05, const EstimatorOptions& options = {});

}  // namespace optknn
