#include "optknn/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "optknn/error.hpp"

namespace optknn {

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kPropensityClamp, 1.0 - kPropensityClamp);
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& d) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += d[i] * eta[i] - softplus(eta[i]);
  return ll;
}

}  // namespace

PropensityModel fit_logit(const Dataset& dataset, const LogitOptions& options) {
  IndexList all(dataset.size());
  std::iota(all.begin(), all.end(), Index{0});
  return fit_logit(dataset, all, options);
}

PropensityModel fit_logit(const Dataset& dataset, std::span<const Index> units,
                          const LogitOptions& options) {
  const auto n = static_cast<Eigen::Index>(units.size());
  const auto dims = static_cast<Eigen::Index>(dataset.dims());
  if (n < 2) throw Error(ErrorCode::InsufficientData, "logit needs at least 2 units");

  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = dataset.treatment(units[static_cast<std::size_t>(i)]);
  const double marginal = d.mean();
  if (!(marginal > 0.0 && marginal < 1.0)) {
    throw Error(ErrorCode::InvalidMarginal, "both treatment values must occur in the fitting sample");
  }

  // Fit in centred and scaled coordinates; constant columns carry no
  // information beyond the intercept and get a zero slope.
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dims);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dims);
  std::vector<Eigen::Index> active;
  for (Eigen::Index p = 0; p < dims; ++p) {
    double sum = 0.0;
    for (Index u : units) sum += dataset.covariates()(static_cast<Eigen::Index>(u), p);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index u : units) {
      const double v = dataset.covariates()(static_cast<Eigen::Index>(u), p) - mean;
      ss += v * v;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    center[p] = mean;
    if (sd > 0.0 && sd > 1e-12 * (std::abs(mean) + 1.0)) {
      scale[p] = sd;
      active.push_back(p);
    }
  }
  const auto cols = static_cast<Eigen::Index>(active.size()) + 1;
  Eigen::MatrixXd z(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<Eigen::Index>(units[static_cast<std::size_t>(i)]);
    z(i, 0) = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index p = active[a];
      z(i, static_cast<Eigen::Index>(a) + 1) = (dataset.covariates()(u, p) - center[p]) / scale[p];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::SingularDesign, "propensity design [1 | X] has rank " +
                                               std::to_string(qr.rank()) + " < " + std::to_string(cols));
  }

  PropensityModel model;
  model.marginal = marginal;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
  beta[0] = std::log(marginal / (1.0 - marginal));
  Eigen::VectorXd eta = z * beta;
  Eigen::VectorXd p(n);
  double ll = log_likelihood(eta, d);
  double grad_norm = 0.0;
  bool polished = false;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    model.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) p[i] = logistic(eta[i]);
    const Eigen::VectorXd grad = z.transpose() * (d - p);
    grad_norm = grad.cwiseAbs().maxCoeff();
    if (eta.cwiseAbs().maxCoeff() > options.separation_eta) {
      model.separation = true;
      break;
    }
    // One more Newton step once the tolerance is met puts the coefficients
    // at rounding level, independent of row order.
    if (grad_norm <= options.gradient_tolerance) {
      if (polished) {
        model.converged = true;
        break;
      }
      polished = true;
    }
    const Eigen::VectorXd w = p.cwiseProduct(Eigen::VectorXd::Ones(n) - p);
    const Eigen::MatrixXd hessian = z.transpose() * w.asDiagonal() * z;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    if (!step.allFinite()) break;

    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    Eigen::VectorXd candidate_eta = z * candidate;
    double candidate_ll = log_likelihood(candidate_eta, d);
    // Near the optimum the likelihood is flat to rounding; allow for that.
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    for (int halving = 0; halving < 40 && !(candidate_ll >= ll - slack); ++halving) {
      t *= 0.5;
      candidate = beta + t * step;
      candidate_eta = z * candidate;
      candidate_ll = log_likelihood(candidate_eta, d);
    }
    // Newton step below rounding level: the score cannot be reduced further.
    const bool stalled = (t * step).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + beta.cwiseAbs().maxCoeff());
    beta = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    model.iterations = iter + 1;
    if (stalled || (polished && iter + 1 == options.max_iterations)) {
      for (Eigen::Index i = 0; i < n; ++i) p[i] = logistic(eta[i]);
      grad_norm = (z.transpose() * (d - p)).cwiseAbs().maxCoeff();
      model.converged = grad_norm <= 1e3 * options.gradient_tolerance;
      break;
    }
  }
  if (model.separation) model.converged = false;

  // Back to the original covariate scale.
  model.coefficients = Eigen::VectorXd::Zero(dims + 1);
  double intercept = beta[0];
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Eigen::Index col = active[a];
    const double slope = beta[static_cast<Eigen::Index>(a) + 1] / scale[col];
    model.coefficients[col + 1] = slope;
    intercept -= slope * center[col];
  }
  model.coefficients[0] = intercept;

  model.fitted.resize(static_cast<std::size_t>(n));
  Eigen::VectorXd raw_p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    raw_p[i] = logistic(eta[i]);
    model.fitted[static_cast<std::size_t>(i)] = clamp_probability(raw_p[i]);
  }
  // Score in the caller's coordinates.
  Eigen::VectorXd score = Eigen::VectorXd::Zero(dims + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = d[i] - raw_p[i];
    const auto u = static_cast<Eigen::Index>(units[static_cast<std::size_t>(i)]);
    score[0] += r;
    for (Eigen::Index q = 0; q < dims; ++q) score[q + 1] += r * dataset.covariates()(u, q);
  }
  model.gradient_norm = score.cwiseAbs().maxCoeff();
  return model;
}

double predict_propensity(const PropensityModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) + 1 != model.coefficients.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate vector of length " + std::to_string(x.size()) +
                                                  " for a model with " +
                                                  std::to_string(model.coefficients.size() - 1) + " slopes");
  }
  double eta = model.coefficients[0];
  for (std::size_t p = 0; p < x.size(); ++p) eta += model.coefficients[static_cast<Eigen::Index>(p) + 1] * x[p];
  return clamp_probability(logistic(eta));
}

}  // namespace optknn
