#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "optknn/dataset.hpp"

namespace optknn {

inline constexpr double kPropensityClamp = 1e-6;

struct LogitOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  // |linear predictor| beyond this on any unit is treated as separation.
  double separation_eta = 15.0;
};

struct PropensityModel {
  Eigen::VectorXd coefficients;  // intercept first
  std::vector<double> fitted;    // clamped to [eps, 1 - eps]
  double marginal = 0.0;         // mean of treatment
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // max-norm of the score at the returned coefficients
};

// Logit maximum likelihood of treatment on [1 | X] by Newton-Raphson with
// step halving. Throws SingularDesign for a rank-deficient design. On
// complete or quasi-complete separation the coefficients reached so far are
// returned with converged = false and separation = true.
PropensityModel fit_logit(const Dataset& dataset, const LogitOptions& options = {});

// Fit on a subset of units only; fitted[] is indexed like `units`.
PropensityModel fit_logit(const Dataset& dataset, std::span<const Index> units,
                          const LogitOptions& options = {});

double logistic(double eta);

// logistic(b0 + b'x) clamped to [1e-6, 1 - 1e-6].
double predict_propensity(const PropensityModel& model, std::span<const double> x);

}  // namespace optknn
