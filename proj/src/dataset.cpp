#include "optknn/dataset.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "optknn/error.hpp"

namespace optknn {

const char* to_string(OutcomeKind kind) {
  return kind == OutcomeKind::Continuous ? "continuous" : "binary";
}

const char* to_string(Estimand estimand) { return estimand == Estimand::ATET ? "atet" : "ate"; }

Dataset::Dataset(RowMatrix covariates, std::vector<int> treatment, std::vector<double> outcome,
                 OutcomeKind kind, std::vector<std::string> names)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      kind_(kind),
      names_(std::move(names)) {
  const auto n = treatment_.size();
  if (n < 2) throw Error(ErrorCode::InvalidDataset, "need at least 2 units");
  if (covariates_.cols() < 1) throw Error(ErrorCode::InvalidDataset, "need at least 1 covariate");
  if (static_cast<std::size_t>(covariates_.rows()) != n || outcome_.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "covariates, treatment and outcome must have the same length");
  }
  if (!covariates_.allFinite()) throw Error(ErrorCode::InvalidDataset, "non-finite covariate");
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment_[i] == 1) {
      treated_.push_back(i);
    } else if (treatment_[i] == 0) {
      controls_.push_back(i);
    } else {
      throw Error(ErrorCode::InvalidDataset, "treatment must be 0 or 1 (unit " + std::to_string(i) + ")");
    }
    if (!std::isfinite(outcome_[i])) throw Error(ErrorCode::InvalidDataset, "non-finite outcome");
    if (kind_ == OutcomeKind::Binary && outcome_[i] != 0.0 && outcome_[i] != 1.0) {
      throw Error(ErrorCode::InvalidDataset, "binary outcome must be 0 or 1");
    }
  }
  if (treated_.empty() || controls_.empty()) {
    throw Error(ErrorCode::InvalidDataset, "need at least one treated and one control unit");
  }
  if (names_.empty()) {
    for (Eigen::Index p = 0; p < covariates_.cols(); ++p) names_.push_back("x" + std::to_string(p + 1));
  } else if (names_.size() != static_cast<std::size_t>(covariates_.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "covariate names do not match covariate count");
  }
}

Dataset Dataset::with_outcome(std::vector<double> outcome) const {
  return Dataset(covariates_, treatment_, std::move(outcome), kind_, names_);
}

Dataset Dataset::standardized() const {
  RowMatrix z = covariates_;
  const double n = static_cast<double>(z.rows());
  for (Eigen::Index p = 0; p < z.cols(); ++p) {
    const double mean = z.col(p).sum() / n;
    z.col(p).array() -= mean;
    const double sd = std::sqrt(z.col(p).squaredNorm() / (n - 1.0));
    if (sd > 0.0) z.col(p) /= sd;
  }
  return Dataset(std::move(z), treatment_, outcome_, kind_, names_);
}

}  // namespace optknn
