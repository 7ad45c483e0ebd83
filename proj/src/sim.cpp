#include "optknn/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "optknn/cv.hpp"
#include "optknn/error.hpp"
#include "optknn/estimator.hpp"
#include "optknn/propensity.hpp"
#include "optknn/rng.hpp"

namespace optknn::sim {

double response_curve(int curve, double r) {
  switch (curve) {
    case 1:
      return 0.15 + 0.7 * r;
    case 2:
      return 0.1 + 0.5 * r + 0.5 * std::exp(-200.0 * (r - 0.7) * (r - 0.7));
    case 3:
      return 0.8 - 2.0 * std::pow(r - 0.9, 2) - 5.0 * std::pow(r - 0.7, 3) - 10.0 * std::pow(r - 0.6, 10);
    case 4:
      return 0.2 + std::sqrt(1.0 - r) - 0.6 * std::pow(0.9 - r, 2);
    case 5:
      return 0.2 + std::sqrt(1.0 - r) - 0.6 * std::pow(0.9 - r, 2) - 0.1 * r * std::cos(30.0 * r);
    case 6:
      return 0.4 + 0.25 * std::sin(8.0 * r - 5.0) + 0.4 * std::exp(-16.0 * std::pow(4.0 * r - 2.5, 2));
    default:
      throw Error(ErrorCode::InvalidArgument, "curve id " + std::to_string(curve) + " outside 1..6");
  }
}

double logistic_cdf(double x) { return logistic(x); }

void SimConfig::validate() const {
  if (n < 20) throw Error(ErrorCode::InvalidArgument, "n must be at least 20");
  if (curve < 1 || curve > 6) throw Error(ErrorCode::InvalidArgument, "curve must be in 1..6");
  if (replications < 1) throw Error(ErrorCode::InvalidArgument, "need at least one replication");
  if (k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be positive");
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be nonnegative");
}

namespace {

// Covariates on the positive orthant of the sphere of radius psi.
double draw_covariates(Rng& rng, double* x) {
  const double psi = rng.uniform();
  double zeta[kDims];
  double norm2 = 0.0;
  for (int j = 0; j < kDims; ++j) {
    zeta[j] = rng.normal();
    norm2 += zeta[j] * zeta[j];
  }
  const double norm = std::sqrt(norm2);
  for (int j = 0; j < kDims; ++j) x[j] = psi * std::abs(zeta[j]) / norm;
  return psi;
}

SimSample assemble(RowMatrix x, std::vector<int> d, std::vector<double> y0, std::vector<double> y1,
                   std::vector<double> p, std::vector<double> effect, OutcomeKind kind) {
  const auto n = d.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = d[i] == 1 ? y1[i] : y0[i];
  double all = 0.0, treated = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    all += effect[i];
    if (d[i] == 1) {
      treated += effect[i];
      ++n1;
    }
  }
  SimSample s{Dataset(std::move(x), std::move(d), std::move(y), kind), std::move(p), std::move(y0), std::move(y1),
              std::move(effect), 0.0, 0.0};
  s.true_ate = all / static_cast<double>(n);
  s.true_atet = n1 > 0 ? treated / static_cast<double>(n1) : 0.0;
  return s;
}

}  // namespace

SimSample generate_continuous(int n, int curve, std::uint64_t seed) {
  response_curve(curve, 0.0);
  Rng rng(seed);
  const auto nn = static_cast<std::size_t>(n);
  RowMatrix x(n, kDims);
  std::vector<int> d(nn);
  std::vector<double> y0(nn), y1(nn), p(nn), effect(nn, kTau);
  for (std::size_t i = 0; i < nn; ++i) {
    const double psi = draw_covariates(rng, x.row(static_cast<Eigen::Index>(i)).data());
    p[i] = kGamma1 + kGamma2Continuous * psi;
    const double v = rng.uniform();
    d[i] = p[i] >= v ? 1 : 0;
    const double eps = kNoiseSd * rng.normal();
    const double m = response_curve(curve, psi);
    y0[i] = m + eps;
    y1[i] = kTau + m + eps;
  }
  SimSample s = assemble(std::move(x), std::move(d), std::move(y0), std::move(y1), std::move(p), std::move(effect),
                         OutcomeKind::Continuous);
  s.true_atet = kTau;
  s.true_ate = kTau;
  return s;
}

SimSample generate_binary(int n, int curve, std::uint64_t seed) {
  response_curve(curve, 0.0);
  Rng rng(seed);
  const auto nn = static_cast<std::size_t>(n);
  RowMatrix x(n, kDims);
  std::vector<int> d(nn);
  std::vector<double> y0(nn), y1(nn), p(nn), effect(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const double psi = draw_covariates(rng, x.row(static_cast<Eigen::Index>(i)).data());
    const double index = kGamma1 + kGamma2Binary * psi;
    p[i] = logistic_cdf(index);
    const double v = rng.logistic();
    d[i] = index > v ? 1 : 0;
    const double eps = rng.logistic();
    const double latent = kBeta * response_curve(curve, psi);
    y1[i] = kTau + latent + eps > 0.0 ? 1.0 : 0.0;
    y0[i] = latent + eps > 0.0 ? 1.0 : 0.0;
    effect[i] = logistic_cdf(kTau + latent) - logistic_cdf(latent);
  }
  return assemble(std::move(x), std::move(d), std::move(y0), std::move(y1), std::move(p), std::move(effect),
                  OutcomeKind::Binary);
}

SimSample generate(const SimConfig& config, std::uint64_t seed) {
  return config.outcome_kind == OutcomeKind::Continuous ? generate_continuous(config.n, config.curve, seed)
                                                        : generate_binary(config.n, config.curve, seed);
}

ReplicationRecord run_replication(const SimConfig& config, int replication) {
  ReplicationRecord rec;
  rec.replication = replication;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto slots = static_cast<std::size_t>(config.k_max);
  rec.estimates.assign(slots, nan);
  rec.ci_low.assign(slots, nan);
  rec.ci_high.assign(slots, nan);
  try {
    const std::uint64_t seed = substream_seed(config.seed, static_cast<std::uint64_t>(replication));
    const SimSample sample = generate(config, seed);
    rec.truth = sample.truth(config.estimand);

    const PropensityModel propensity = fit_logit(sample.data);
    const FoldAssignment folds = stratified_folds(sample.data, config.folds, mix64(seed));
    const int k_max = std::min(config.k_max, max_feasible_cv_k(sample.data, folds, config.estimand));
    if (k_max < 1) throw Error(ErrorCode::InfeasibleK, "no feasible k");
    rec.k_max_used = k_max;

    const CvResult cv = cv_curve(sample.data, folds, k_max, config.estimand, propensity);
    rec.cv_mse = cv.mse;
    rec.k_star = cv.k_star;

    const EffectPath path(sample.data, k_max, config.estimand);
    for (int k = 1; k <= k_max; ++k) {
      const EffectEstimate est = path.at(k, config.alpha);
      const auto j = static_cast<std::size_t>(k - 1);
      rec.estimates[j] = est.point;
      rec.ci_low[j] = est.ci_low;
      rec.ci_high[j] = est.ci_high;
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

MrseTable mrse(const std::vector<std::vector<double>>& estimates_by_rep, const std::vector<int>& k_star,
               const std::vector<double>& truth, int k_max) {
  if (estimates_by_rep.size() != k_star.size() || k_star.size() != truth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "replication records are not aligned");
  }
  MrseTable table;
  const auto slots = static_cast<std::size_t>(k_max);
  table.mrse.assign(slots, std::nullopt);
  table.median_ratio.assign(slots, std::nullopt);
  table.count.assign(slots, 0);
  const auto available = [](const std::vector<double>& row, int k) {
    return k >= 1 && static_cast<std::size_t>(k) <= row.size() && !std::isnan(row[static_cast<std::size_t>(k - 1)]);
  };
  for (int k = 1; k <= k_max; ++k) {
    std::vector<double> ratios;
    double sum = 0.0;
    for (std::size_t s = 0; s < estimates_by_rep.size(); ++s) {
      const auto& row = estimates_by_rep[s];
      if (k_star[s] == k || !available(row, k) || !available(row, k_star[s])) continue;
      const double denom = row[static_cast<std::size_t>(k_star[s] - 1)] - truth[s];
      if (denom == 0.0) continue;
      const double ratio = (row[static_cast<std::size_t>(k - 1)] - truth[s]) / denom;
      sum += ratio * ratio;
      ratios.push_back(ratio * ratio);
    }
    const auto j = static_cast<std::size_t>(k - 1);
    table.count[j] = static_cast<int>(ratios.size());
    if (ratios.empty()) continue;
    table.mrse[j] = sum / static_cast<double>(ratios.size());
    std::sort(ratios.begin(), ratios.end());
    const std::size_t mid = ratios.size() / 2;
    table.median_ratio[j] = ratios.size() % 2 == 1 ? ratios[mid] : 0.5 * (ratios[mid - 1] + ratios[mid]);
  }
  return table;
}

void aggregate(SimResult& result) {
  const int k_max = result.config.k_max;
  const auto slots = static_cast<std::size_t>(k_max);
  result.failed = 0;
  result.grid_shrunk = 0;
  std::vector<std::vector<double>> estimates;
  std::vector<int> k_star;
  std::vector<double> truth;
  std::vector<double> ratio_sum(slots, 0.0), reject_sum(slots, 0.0);
  std::vector<int> ratio_n(slots, 0), reject_n(slots, 0);
  result.kstar_hist.assign(slots, 0);
  int reject_at_star = 0, n_ok = 0;

  for (const auto& rec : result.records) {
    if (!rec.ok) {
      ++result.failed;
      continue;
    }
    ++n_ok;
    if (rec.k_max_used < k_max) ++result.grid_shrunk;
    estimates.push_back(rec.estimates);
    k_star.push_back(rec.k_star);
    truth.push_back(rec.truth);
    ++result.kstar_hist[static_cast<std::size_t>(rec.k_star - 1)];
    const auto js = static_cast<std::size_t>(rec.k_star - 1);
    const double star_length = rec.ci_high[js] - rec.ci_low[js];
    for (std::size_t j = 0; j < static_cast<std::size_t>(rec.k_max_used); ++j) {
      const bool reject = rec.truth < rec.ci_low[j] || rec.truth > rec.ci_high[j];
      reject_sum[j] += reject ? 1.0 : 0.0;
      ++reject_n[j];
      if (star_length > 0.0) {
        ratio_sum[j] += (rec.ci_high[j] - rec.ci_low[j]) / star_length;
        ++ratio_n[j];
      }
    }
    if (rec.truth < rec.ci_low[js] || rec.truth > rec.ci_high[js]) ++reject_at_star;
  }

  result.mrse = mrse(estimates, k_star, truth, k_max);
  result.ci_ratio.assign(slots, std::nullopt);
  result.type1.assign(slots, std::nullopt);
  for (std::size_t j = 0; j < slots; ++j) {
    if (ratio_n[j] > 0) result.ci_ratio[j] = ratio_sum[j] / ratio_n[j];
    if (reject_n[j] > 0) result.type1[j] = reject_sum[j] / reject_n[j];
  }
  if (n_ok > 0) {
    result.type1_at_kstar = static_cast<double>(reject_at_star) / n_ok;
    result.coverage_at_kstar = 1.0 - *result.type1_at_kstar;
  } else {
    result.type1_at_kstar.reset();
    result.coverage_at_kstar.reset();
  }
}

SimResult run_monte_carlo(const SimConfig& config) {
  config.validate();
  SimResult result;
  result.config = config;
  result.records.resize(static_cast<std::size_t>(config.replications));

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(config.replications));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int r = next++; r < config.replications; r = next++) {
      result.records[static_cast<std::size_t>(r)] = run_replication(config, r);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  aggregate(result);
  return result;
}

}  // namespace optknn::sim
