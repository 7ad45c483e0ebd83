#include "optknn/transform.hpp"

#include <string>

#include "optknn/error.hpp"

namespace optknn {

double transformed_outcome_atet(double y, int d, double p_hat, double p_marginal) {
  if (!(p_marginal > 0.0 && p_marginal < 1.0)) {
    throw Error(ErrorCode::InvalidMarginal, "marginal treatment probability " +
                                                std::to_string(p_marginal) + " outside (0, 1)");
  }
  return y * (d - p_hat) / (p_marginal * (1.0 - p_hat));
}

double transformed_outcome_ate(double y, int d, double p_hat) {
  return y * (d - p_hat) / (p_hat * (1.0 - p_hat));
}

TransformedOutcomes transformed_outcomes(const Dataset& dataset, std::span<const double> p_hat,
                                         double p_marginal, Estimand estimand) {
  if (p_hat.size() != dataset.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one propensity per unit required");
  }
  TransformedOutcomes out;
  out.estimand = estimand;
  out.values.resize(dataset.size());
  for (Index i = 0; i < dataset.size(); ++i) {
    out.values[i] = estimand == Estimand::ATET
                        ? transformed_outcome_atet(dataset.outcome(i), dataset.treatment(i), p_hat[i], p_marginal)
                        : transformed_outcome_ate(dataset.outcome(i), dataset.treatment(i), p_hat[i]);
  }
  return out;
}

}  // namespace optknn
