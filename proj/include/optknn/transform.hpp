#pragma once

#include <span>
#include <vector>

#include "optknn/dataset.hpp"

namespace optknn {

// Inverse-propensity transformed outcomes whose conditional mean is the
// target effect. Used as the cross-validation reference.

// y (d - p) / (marginal (1 - p)); throws InvalidMarginal unless 0 < marginal < 1.
double transformed_outcome_atet(double y, int d, double p_hat, double p_marginal);

// y (d - p) / (p (1 - p)).
double transformed_outcome_ate(double y, int d, double p_hat);

struct TransformedOutcomes {
  std::vector<double> values;
  Estimand estimand = Estimand::ATET;
};

// One value per unit of `dataset`; p_hat is indexed by unit.
TransformedOutcomes transformed_outcomes(const Dataset& dataset, std::span<const double> p_hat,
                                         double p_marginal, Estimand estimand);

}  // namespace optknn
