#pragma once

#include <span>
#include <string>
#include <vector>

#include "optknn/dataset.hpp"
#include "optknn/matching.hpp"

namespace optknn {

// Welch-type t = (m1 - m0) / sqrt(s1^2/n1 + s0^2/n0), n - 1 variances.
double mean_difference_test(std::span<const double> sample1, std::span<const double> sample0);

// Pooled two-proportion z statistic.
double proportion_difference_test(double x1, double n1, double x0, double n0);

struct BalanceRecord {
  std::string name;
  bool binary = false;
  double treated_mean = 0.0;
  double control_mean = 0.0;
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = true;
};

struct BalanceReport {
  std::vector<BalanceRecord> records;
  double alpha = 0.05;
  bool pass = true;
};

// Treated units against their matched controls, each control weighted by
// J_i / k. Covariates taking only the values 0 and 1 use the proportion test,
// the others the t test; both are compared with the normal critical value.
BalanceReport balance_report(const Dataset& dataset, const MatchSet& treated_to_controls,
                             double alpha = 0.05);

}  // namespace optknn
