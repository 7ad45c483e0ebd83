#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optknn/dataset.hpp"

namespace optknn::sim {

inline constexpr double kTau = 0.5;
inline constexpr double kGamma1 = 0.15;
inline constexpr double kGamma2Continuous = 0.7;
inline constexpr double kGamma2Binary = 0.4;
inline constexpr double kBeta = 0.5;
inline constexpr double kNoiseSd = 0.2;
inline constexpr int kDims = 5;

// m_1 .. m_6 evaluated at r = ||x||. Throws InvalidArgument for other ids.
double response_curve(int curve, double r);

double logistic_cdf(double x);

struct SimConfig {
  int n = 100;
  int curve = 1;
  OutcomeKind outcome_kind = OutcomeKind::Continuous;
  Estimand estimand = Estimand::ATET;
  int replications = 200;
  int k_max = 20;
  int folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  // 0 picks std::thread::hardware_concurrency().
  int threads = 0;

  void validate() const;
};

// A generated sample together with the quantities only a simulation knows.
struct SimSample {
  Dataset data;
  std::vector<double> true_propensity;
  std::vector<double> y0;
  std::vector<double> y1;
  std::vector<double> unit_effect;  // E[Y(1) - Y(0) | X]
  double true_atet = 0.0;
  double true_ate = 0.0;

  double truth(Estimand estimand) const { return estimand == Estimand::ATET ? true_atet : true_ate; }
};

// Continuous design: X_ij = psi |zeta_j| / ||zeta||, P(X) = 0.15 + 0.7 ||X||,
// Y(d) = 0.5 d + m(||X||) + eps with eps ~ N(0, 0.2^2).
SimSample generate_continuous(int n, int curve, std::uint64_t seed);
// Binary design: latent-threshold outcomes with logistic noise, beta = 0.5,
// P(D = 1 | X) = F(0.15 + 0.4 ||X||).
SimSample generate_binary(int n, int curve, std::uint64_t seed);
SimSample generate(const SimConfig& config, std::uint64_t seed);

struct ReplicationRecord {
  int replication = 0;
  bool ok = false;
  std::string failure;
  double truth = 0.0;
  int k_star = 0;
  int k_max_used = 0;  // below config.k_max when the grid had to shrink
  std::vector<double> cv_mse;
  // Indexed by k - 1 up to k_max_used; NaN past it.
  std::vector<double> estimates;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
};

struct MrseTable {
  // Indexed by k - 1; empty when S_k = 0.
  std::vector<std::optional<double>> mrse;
  std::vector<std::optional<double>> median_ratio;
  std::vector<int> count;  // S_k
};

// MRSE(k) = (1/S_k) sum over replications with k* != k of
// ((est(k) - truth) / (est(k*) - truth))^2. Replications missing est(k), or
// whose k* error is exactly zero, do not enter S_k.
MrseTable mrse(const std::vector<std::vector<double>>& estimates_by_rep,
               const std::vector<int>& k_star, const std::vector<double>& truth, int k_max);

struct SimResult {
  SimConfig config;
  std::vector<ReplicationRecord> records;
  int failed = 0;
  int grid_shrunk = 0;

  MrseTable mrse;
  std::vector<std::optional<double>> ci_ratio;  // mean of length(k) / length(k*)
  std::vector<std::optional<double>> type1;     // rejection rate of H0: effect = truth
  std::optional<double> type1_at_kstar;
  std::optional<double> coverage_at_kstar;
  std::vector<int> kstar_hist;  // indexed by k - 1
};

// One replication; never throws, failures are recorded in the result.
ReplicationRecord run_replication(const SimConfig& config, int replication);

SimResult run_monte_carlo(const SimConfig& config);

// Aggregates from records alone; run_monte_carlo calls this after collecting.
void aggregate(SimResult& result);

}  // namespace optknn::sim
