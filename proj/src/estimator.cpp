#include "optknn/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include "optknn/error.hpp"
#include "optknn/normal.hpp"

namespace optknn {

namespace {

Eigen::Index basis_size(Index dims, int series_order) {
  return 1 + static_cast<Eigen::Index>(dims) * series_order;
}

template <typename Row>
void fill_basis(const Row& x, Index dims, int series_order, double* out) {
  out[0] = 1.0;
  for (Index p = 0; p < dims; ++p) out[1 + p] = x[p];
  if (series_order >= 2) {
    for (Index p = 0; p < dims; ++p) out[1 + dims + p] = x[p] * x[p];
  }
}

double mean_outcome(const Dataset& dataset, const IndexList& units) {
  double sum = 0.0;
  for (Index j : units) sum += dataset.outcome(j);
  return sum / static_cast<double>(units.size());
}

double mean_prediction(const Dataset& dataset, const IndexList& units, const OutcomeRegression& mu) {
  double sum = 0.0;
  for (Index j : units) sum += mu.predict(dataset, j);
  return sum / static_cast<double>(units.size());
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

void require_queries(const MatchSet& matches, const char* what) {
  if (matches.query_indices.empty()) throw Error(ErrorCode::NoTreated, std::string(what) + " has no query units");
}

}  // namespace

OutcomeRegression::OutcomeRegression(Eigen::VectorXd coefficients, Arm arm, int series_order)
    : coefficients_(std::move(coefficients)), arm_(arm), series_order_(series_order) {}

double OutcomeRegression::predict(std::span<const double> x) const {
  if (basis_size(x.size(), series_order_) != coefficients_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate vector does not fit the regression basis");
  }
  double value = coefficients_[0];
  const auto dims = static_cast<Eigen::Index>(x.size());
  for (Eigen::Index p = 0; p < dims; ++p) value += coefficients_[1 + p] * x[static_cast<std::size_t>(p)];
  if (series_order_ >= 2) {
    for (Eigen::Index p = 0; p < dims; ++p) {
      const double v = x[static_cast<std::size_t>(p)];
      value += coefficients_[1 + dims + p] * v * v;
    }
  }
  return value;
}

double OutcomeRegression::predict(const Dataset& dataset, Index unit) const {
  const auto row = dataset.row(unit);
  return predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

OutcomeRegression fit_outcome_regression(const Dataset& dataset, Arm arm, std::span<const Index> units,
                                         int series_order) {
  if (series_order < 1 || series_order > 2) {
    throw Error(ErrorCode::InvalidArgument, "series order must be 1 or 2");
  }
  const int want = arm == Arm::Treated ? 1 : 0;
  for (Index u : units) {
    if (u >= dataset.size() || dataset.treatment(u) != want) {
      throw Error(ErrorCode::InvalidArgument, "regression subset contains a unit outside the arm");
    }
  }
  const Index dims = dataset.dims();
  const Eigen::Index cols = basis_size(dims, series_order);
  const auto n = static_cast<Eigen::Index>(units.size());
  if (n < cols) {
    throw Error(ErrorCode::InsufficientData, std::to_string(n) + " units for " + std::to_string(cols) +
                                                 " regression coefficients");
  }
  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd y(n);
  std::vector<double> basis(static_cast<std::size_t>(cols));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Index u = units[static_cast<std::size_t>(i)];
    fill_basis(dataset.row(u), dims, series_order, basis.data());
    for (Eigen::Index c = 0; c < cols; ++c) design(i, c) = basis[static_cast<std::size_t>(c)];
    y[i] = dataset.outcome(u);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::SingularDesign, "outcome regression design has rank " + std::to_string(qr.rank()) +
                                               " < " + std::to_string(cols));
  }
  return OutcomeRegression(qr.solve(y), arm, series_order);
}

OutcomeRegression fit_outcome_regression(const Dataset& dataset, Arm arm, int series_order) {
  return fit_outcome_regression(dataset, arm, arm == Arm::Treated ? dataset.treated() : dataset.controls(),
                                series_order);
}

double matching_atet(const Dataset& dataset, const MatchSet& treated_to_controls) {
  require_queries(treated_to_controls, "treated-to-control match set");
  double sum = 0.0;
  for (std::size_t q = 0; q < treated_to_controls.query_indices.size(); ++q) {
    const Index i = treated_to_controls.query_indices[q];
    sum += dataset.outcome(i) - mean_outcome(dataset, treated_to_controls.matches[q]);
  }
  return sum / static_cast<double>(treated_to_controls.query_indices.size());
}

double bias_atet(const Dataset& dataset, const MatchSet& treated_to_controls, const OutcomeRegression& mu0) {
  require_queries(treated_to_controls, "treated-to-control match set");
  double sum = 0.0;
  for (std::size_t q = 0; q < treated_to_controls.query_indices.size(); ++q) {
    const Index i = treated_to_controls.query_indices[q];
    sum += mu0.predict(dataset, i) - mean_prediction(dataset, treated_to_controls.matches[q], mu0);
  }
  return sum / static_cast<double>(treated_to_controls.query_indices.size());
}

double matching_ate(const Dataset& dataset, const MatchSet& treated_to_controls,
                    const MatchSet& controls_to_treated) {
  require_queries(treated_to_controls, "treated-to-control match set");
  require_queries(controls_to_treated, "control-to-treated match set");
  double sum = 0.0;
  for (std::size_t q = 0; q < treated_to_controls.query_indices.size(); ++q) {
    const Index i = treated_to_controls.query_indices[q];
    sum += dataset.outcome(i) - mean_outcome(dataset, treated_to_controls.matches[q]);
  }
  for (std::size_t q = 0; q < controls_to_treated.query_indices.size(); ++q) {
    const Index i = controls_to_treated.query_indices[q];
    sum += mean_outcome(dataset, controls_to_treated.matches[q]) - dataset.outcome(i);
  }
  const auto n = treated_to_controls.query_indices.size() + controls_to_treated.query_indices.size();
  return sum / static_cast<double>(n);
}

double bias_ate(const Dataset& dataset, const MatchSet& treated_to_controls,
                const MatchSet& controls_to_treated, const OutcomeRegression& mu0,
                const OutcomeRegression& mu1) {
  require_queries(treated_to_controls, "treated-to-control match set");
  require_queries(controls_to_treated, "control-to-treated match set");
  double sum = 0.0;
  for (std::size_t q = 0; q < treated_to_controls.query_indices.size(); ++q) {
    const Index i = treated_to_controls.query_indices[q];
    sum += mu0.predict(dataset, i) - mean_prediction(dataset, treated_to_controls.matches[q], mu0);
  }
  for (std::size_t q = 0; q < controls_to_treated.query_indices.size(); ++q) {
    const Index i = controls_to_treated.query_indices[q];
    sum -= mu1.predict(dataset, i) - mean_prediction(dataset, controls_to_treated.matches[q], mu1);
  }
  const auto n = treated_to_controls.query_indices.size() + controls_to_treated.query_indices.size();
  return sum / static_cast<double>(n);
}

std::vector<double> conditional_variance(const Dataset& dataset, int k) {
  return conditional_variance(dataset, find_same_arm_neighbors(dataset, k));
}

std::vector<double> conditional_variance(const Dataset& dataset, const SameArmNeighbors& neighbors) {
  std::vector<double> sigma2(dataset.size(), 0.0);
  for (const MatchSet* arm : {&neighbors.treated, &neighbors.controls}) {
    const double k = arm->k;
    for (std::size_t q = 0; q < arm->query_indices.size(); ++q) {
      const Index i = arm->query_indices[q];
      const double resid = dataset.outcome(i) - mean_outcome(dataset, arm->matches[q]);
      sigma2[i] = k / (k + 1.0) * resid * resid;
    }
  }
  return sigma2;
}

VarianceComponents variance_components_atet(const Dataset& dataset, const MatchSet& treated_to_controls,
                                            std::span<const double> sigma2, const OutcomeRegression& mu0,
                                            const OutcomeRegression& mu1) {
  if (sigma2.size() != dataset.size()) throw Error(ErrorCode::DimensionMismatch, "sigma2 must be per unit");
  require_queries(treated_to_controls, "treated-to-control match set");
  const std::vector<int> used = treated_to_controls.counts_by_unit(dataset.size());
  const double k = treated_to_controls.k;
  double sum = 0.0;
  for (Index i = 0; i < dataset.size(); ++i) {
    const double w = dataset.treatment(i) == 1 ? 1.0 : used[i] / k;
    sum += w * w * sigma2[i];
  }
  std::vector<double> effects;
  effects.reserve(dataset.n_treated());
  for (Index i : dataset.treated()) effects.push_back(mu1.predict(dataset, i) - mu0.predict(dataset, i));
  return {sum / static_cast<double>(dataset.n_treated()), sample_variance(effects)};
}

VarianceComponents variance_components_ate(const Dataset& dataset, const MatchSet& treated_to_controls,
                                           const MatchSet& controls_to_treated, std::span<const double> sigma2,
                                           const OutcomeRegression& mu0, const OutcomeRegression& mu1) {
  if (sigma2.size() != dataset.size()) throw Error(ErrorCode::DimensionMismatch, "sigma2 must be per unit");
  require_queries(treated_to_controls, "treated-to-control match set");
  require_queries(controls_to_treated, "control-to-treated match set");
  const std::vector<int> used_as_control = treated_to_controls.counts_by_unit(dataset.size());
  const std::vector<int> used_as_treated = controls_to_treated.counts_by_unit(dataset.size());
  double sum = 0.0;
  for (Index i = 0; i < dataset.size(); ++i) {
    const double w = dataset.treatment(i) == 1 ? 1.0 + used_as_treated[i] / static_cast<double>(controls_to_treated.k)
                                               : 1.0 + used_as_control[i] / static_cast<double>(treated_to_controls.k);
    sum += w * w * sigma2[i];
  }
  std::vector<double> effects;
  effects.reserve(dataset.size());
  for (Index i = 0; i < dataset.size(); ++i) effects.push_back(mu1.predict(dataset, i) - mu0.predict(dataset, i));
  return {sum / static_cast<double>(dataset.size()), sample_variance(effects)};
}

std::pair<double, double> confidence_interval(double point, double v_total, Index n_eff, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (n_eff == 0) throw Error(ErrorCode::InvalidArgument, "effective sample size must be positive");
  if (!(v_total >= 0.0)) throw Error(ErrorCode::InvalidArgument, "variance must be nonnegative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(v_total / static_cast<double>(n_eff));
  return {point - half, point + half};
}

double EffectEstimate::std_error() const {
  return std::sqrt((v_e + v_delta) / static_cast<double>(n_eff));
}

int max_feasible_k(const Dataset& dataset, Estimand) {
  // Opposite-arm matches need k <= N_arm; same-arm neighbourhoods exclude
  // the unit itself and need k <= N_arm - 1.
  const auto smallest = std::min(dataset.n_treated(), dataset.n_control());
  return static_cast<int>(smallest) - 1;
}

EffectPath::EffectPath(const Dataset& dataset, int k_max, Estimand estimand, const EstimatorOptions& options)
    : dataset_(&dataset),
      k_max_(k_max),
      estimand_(estimand),
      mu0_(fit_outcome_regression(dataset, Arm::Control, options.series_order)),
      mu1_(fit_outcome_regression(dataset, Arm::Treated, options.series_order)) {
  if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k_max > max_feasible_k(dataset, estimand)) {
    throw Error(ErrorCode::InsufficientPool,
                "k = " + std::to_string(k_max) + " needs more units per arm (N1 = " +
                    std::to_string(dataset.n_treated()) + ", N0 = " + std::to_string(dataset.n_control()) + ")");
  }
  const Dataset scaled = options.standardize ? dataset.standardized() : Dataset(dataset);
  treated_to_controls_ = match_treated_to_controls(scaled, k_max);
  if (estimand == Estimand::ATE) controls_to_treated_ = match_controls_to_treated(scaled, k_max);
  same_arm_ = find_same_arm_neighbors(scaled, k_max);
}

EffectEstimate EffectPath::at(int k, double alpha) const {
  if (k < 1 || k > k_max_) {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " outside 1.." + std::to_string(k_max_));
  }
  const Dataset& ds = *dataset_;
  const MatchSet t2c = treated_to_controls_.prefix(k);
  const std::vector<double> sigma2 = conditional_variance(ds, same_arm_.prefix(k));

  EffectEstimate est;
  est.estimand = estimand_;
  est.k = k;
  est.alpha = alpha;
  VarianceComponents vc;
  if (estimand_ == Estimand::ATET) {
    est.raw = matching_atet(ds, t2c);
    est.bias = bias_atet(ds, t2c, mu0_);
    vc = variance_components_atet(ds, t2c, sigma2, mu0_, mu1_);
    est.n_eff = ds.n_treated();
  } else {
    const MatchSet c2t = controls_to_treated_.prefix(k);
    est.raw = matching_ate(ds, t2c, c2t);
    est.bias = bias_ate(ds, t2c, c2t, mu0_, mu1_);
    vc = variance_components_ate(ds, t2c, c2t, sigma2, mu0_, mu1_);
    est.n_eff = ds.size();
  }
  est.point = est.raw - est.bias;
  est.v_e = vc.v_e;
  est.v_delta = vc.v_delta;
  std::tie(est.ci_low, est.ci_high) = confidence_interval(est.point, est.v_e + est.v_delta, est.n_eff, alpha);
  return est;
}

EffectEstimate bias_corrected_effect(const Dataset& dataset, int k, Estimand estimand, double alpha,
                                     const EstimatorOptions& options) {
  return EffectPath(dataset, k, estimand, options).at(k, alpha);
}

}  // namespace optknn
