#include "optknn/balance.hpp"

#include <cmath>
#include <limits>

#include "optknn/error.hpp"
#include "optknn/normal.hpp"

namespace optknn {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

// Statistic for a zero denominator: 0 when the arms agree, otherwise infinite.
double degenerate(double numerator) {
  if (numerator == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), numerator);
}

}  // namespace

double mean_difference_test(std::span<const double> sample1, std::span<const double> sample0) {
  if (sample1.size() < 2 || sample0.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "t test needs at least 2 observations per sample");
  }
  const double m1 = mean_of(sample1);
  const double m0 = mean_of(sample0);
  const double se2 = variance_of(sample1, m1) / static_cast<double>(sample1.size()) +
                     variance_of(sample0, m0) / static_cast<double>(sample0.size());
  if (!(se2 > 0.0)) throw Error(ErrorCode::UndefinedStatistic, "both samples have zero variance");
  return (m1 - m0) / std::sqrt(se2);
}

double proportion_difference_test(double x1, double n1, double x0, double n0) {
  if (!(n1 >= 1.0 && n0 >= 1.0) || x1 < 0.0 || x0 < 0.0 || x1 > n1 || x0 > n0) {
    throw Error(ErrorCode::InvalidArgument, "successes must lie in [0, n] with n >= 1");
  }
  const double pooled = (x1 + x0) / (n1 + n0);
  if (pooled <= 0.0 || pooled >= 1.0) {
    throw Error(ErrorCode::UndefinedStatistic, "pooled proportion is 0 or 1");
  }
  return (x1 / n1 - x0 / n0) / std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0));
}

BalanceReport balance_report(const Dataset& dataset, const MatchSet& treated_to_controls, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const auto& queries = treated_to_controls.query_indices;
  if (queries.empty()) throw Error(ErrorCode::NoTreated, "balance needs at least one matched treated unit");

  BalanceReport report;
  report.alpha = alpha;
  const double critical = normal_quantile(1.0 - alpha / 2.0);
  const double n1 = static_cast<double>(queries.size());
  const double k = treated_to_controls.k;
  const auto& x = dataset.covariates();

  for (Index p = 0; p < dataset.dims(); ++p) {
    const auto col = static_cast<Eigen::Index>(p);
    const auto at = [&](Index i) { return x(static_cast<Eigen::Index>(i), col); };
    BalanceRecord rec;
    rec.name = dataset.covariate_names()[p];
    rec.critical = critical;
    rec.binary = true;
    for (Index i = 0; i < dataset.size(); ++i) {
      if (at(i) != 0.0 && at(i) != 1.0) {
        rec.binary = false;
        break;
      }
    }

    // Matched controls enter once per use with weight 1/k, in query order,
    // so the weights sum to N1.
    double sum1 = 0.0, sum0 = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      sum1 += at(queries[q]);
      double matched = 0.0;
      for (Index j : treated_to_controls.matches[q]) matched += at(j);
      sum0 += matched / k;
    }
    rec.treated_mean = sum1 / n1;
    rec.control_mean = sum0 / n1;
    const double diff = rec.treated_mean - rec.control_mean;

    double denom2;
    if (rec.binary) {
      const double pooled = (sum1 + sum0) / (2.0 * n1);
      denom2 = pooled * (1.0 - pooled) * (2.0 / n1);
    } else {
      double ss1 = 0.0, ss0 = 0.0;
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const double d1 = at(queries[q]) - rec.treated_mean;
        ss1 += d1 * d1;
        for (Index j : treated_to_controls.matches[q]) {
          const double d0 = at(j) - rec.control_mean;
          ss0 += d0 * d0 / k;
        }
      }
      const double dof = n1 > 1.0 ? n1 - 1.0 : 1.0;
      denom2 = ss1 / dof / n1 + ss0 / dof / n1;
    }
    rec.statistic = denom2 > 0.0 ? diff / std::sqrt(denom2) : degenerate(diff);
    rec.pass = std::abs(rec.statistic) < critical;
    report.pass = report.pass && rec.pass;
    report.records.push_back(rec);
  }
  return report;
}

}  // namespace optknn
