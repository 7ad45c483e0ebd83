#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "optknn/cv.hpp"

#include "optknn/error.hpp"
#include "optknn/rng.hpp"
#include "optknn/sim.hpp"

using namespace optknn;

namespace {

// The six curves typed again in long double.
long double curve_oracle(int c, long double r) {
  switch (c) {
    case 1: return 0.15L + 0.7L * r;
    case 2: return 0.1L + 0.5L * r + 0.5L * expl(-200.0L * (r - 0.7L) * (r - 0.7L));
    case 3: {
      const long double a = r - 0.9L, b = r - 0.7L, c6 = r - 0.6L;
      long double c10 = 1.0L;
      for (int i = 0; i < 10; ++i) c10 *= c6;
      return 0.8L - 2.0L * a * a - 5.0L * b * b * b - 10.0L * c10;
    }
    case 4: return 0.2L + sqrtl(1.0L - r) - 0.6L * (0.9L - r) * (0.9L - r);
    case 5: return 0.2L + sqrtl(1.0L - r) - 0.6L * (0.9L - r) * (0.9L - r) - 0.1L * r * cosl(30.0L * r);
    default: {
      const long double u = 4.0L * r - 2.5L;
      return 0.4L + 0.25L * sinl(8.0L * r - 5.0L) + 0.4L * expl(-16.0L * u * u);
    }
  }
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * (i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("response curves") {
  CHECK(sim::response_curve(1, 0.0) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(sim::response_curve(1, 1.0) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(std::fabs(sim::response_curve(3, 0.6) - 0.625) < 1e-14);
  CHECK(std::fabs(sim::response_curve(5, 0.5) - 0.849091176829488588) < 1e-14);
  CHECK(std::fabs(sim::response_curve(6, 0.625) - 0.8) < 1e-14);
  CHECK(std::fabs(sim::response_curve(2, 0.7) - 0.95) < 1e-14);
  CHECK(std::fabs(sim::response_curve(4, 0.3) - 0.820660026534075548) < 1e-14);
  for (int c = 1; c <= 6; ++c) {
    for (int i = 0; i <= 100; ++i) {
      const double r = i / 100.0;
      CHECK(std::fabs(sim::response_curve(c, r) - static_cast<double>(curve_oracle(c, r))) < 1e-13);
    }
  }
  CHECK_THROWS_AS(sim::response_curve(0, 0.5), Error);
  CHECK_THROWS_AS(sim::response_curve(7, 0.5), Error);
}

TEST_CASE("rng substreams and transforms") {
  CHECK(substream_seed(1, 0) != substream_seed(1, 1));
  CHECK(substream_seed(1, 5) == substream_seed(1, 5));
  CHECK(substream_seed(2, 0) != substream_seed(1, 0));
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::fabs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::fabs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("continuous design") {
  const sim::SimSample s = sim::generate_continuous(100000, 2, 5);
  const auto& ds = s.data;
  double treated = 0.0, effect = 0.0, worst_norm = 0.0;
  bool nonnegative = true, observed = true;
  for (Index i = 0; i < ds.size(); ++i) {
    double norm = 0.0;
    for (Index j = 0; j < ds.dims(); ++j) {
      nonnegative = nonnegative && ds.covariates()(i, j) >= 0.0;
      norm += ds.covariates()(i, j) * ds.covariates()(i, j);
    }
    norm = std::sqrt(norm);
    worst_norm = std::max(worst_norm, std::fabs(s.true_propensity[i] - (0.15 + 0.7 * norm)));
    observed = observed && ds.outcome(i) == (ds.treatment(i) ? s.y1[i] : s.y0[i]);
    treated += ds.treatment(i);
    effect += s.y1[i] - s.y0[i];
  }
  CHECK(nonnegative);
  CHECK(observed);
  CHECK(worst_norm < 1e-12);
  const double share = treated / ds.size();
  CHECK(std::fabs(share - 0.5) < 3.0 * std::sqrt(0.25 / ds.size()));
  CHECK(std::fabs(effect / ds.size() - 0.5) < 1e-12);
  CHECK(s.true_atet == 0.5);
  CHECK(s.true_ate == 0.5);
}

TEST_CASE("binary design") {
  CHECK(std::fabs(sim::logistic_cdf(0.5) - sim::logistic_cdf(0.0) - 0.12246) < 5e-6);
  const sim::SimSample s = sim::generate_binary(1000000, 1, 8);
  const auto& ds = s.data;
  double sum = 0.0, sq = 0.0;
  Index n1 = 0;
  bool binary = true, observed = true;
  for (Index i = 0; i < ds.size(); ++i) {
    binary = binary && (ds.outcome(i) == 0.0 || ds.outcome(i) == 1.0);
    observed = observed && ds.outcome(i) == (ds.treatment(i) ? s.y1[i] : s.y0[i]);
    if (ds.treatment(i)) {
      sum += s.unit_effect[i];
      sq += s.unit_effect[i] * s.unit_effect[i];
      ++n1;
    }
  }
  CHECK(binary);
  CHECK(observed);
  CHECK(ds.outcome_kind() == OutcomeKind::Binary);
  CHECK(s.true_atet == doctest::Approx(sum / n1).epsilon(1e-12));
  // Quadrature of E[P(X) effect(X)] / E[P(X)] over ||X|| ~ U[0, 1].
  const double integral = 0.116625209223220363;
  const double sd = std::sqrt(sq / n1 - (sum / n1) * (sum / n1));
  CHECK(std::fabs(s.true_atet - integral) < 3.0 * sd / std::sqrt(static_cast<double>(n1)));
  CHECK(std::fabs(s.true_ate - 0.116760386218908008) < 1e-4);
}

TEST_CASE("mrse hand cases") {
  const double nan = std::nan("");
  SUBCASE("equal estimates give one") {
    const auto t = sim::mrse({{0.7, 0.7, 0.7}, {0.2, 0.2, 0.2}}, {1, 2}, {0.5, 0.5}, 3);
    CHECK(*t.mrse[0] == 1.0);
    CHECK(*t.mrse[2] == 1.0);
    CHECK(t.count == std::vector<int>{1, 1, 2});
  }
  SUBCASE("doubled error gives four") {
    const auto t = sim::mrse({{0.6, 0.7}}, {1}, {0.5}, 2);
    CHECK(!t.mrse[0].has_value());
    CHECK(*t.mrse[1] == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("five records") {
    // k* errors: 0.1, -0.2, 0.05, 0.1, 0.4 ; errors at k = 2 for reps with k* != 2.
    const std::vector<std::vector<double>> est{
        {0.6, 0.8, nan}, {0.3, 0.1, 0.5}, {0.55, 0.45, 0.5}, {0.5, 0.6, 0.9}, {0.9, 0.5, 0.5}};
    const std::vector<int> ks{1, 1, 1, 2, 1};
    const auto t = sim::mrse(est, ks, {0.5, 0.5, 0.5, 0.5, 0.5}, 3);
    const double expected2 = (std::pow(0.3 / 0.1, 2) + std::pow(-0.4 / -0.2, 2) + std::pow(-0.05 / 0.05, 2) +
                              std::pow(0.0 / 0.4, 2)) / 4.0;
    CHECK(*t.mrse[1] == doctest::Approx(expected2).epsilon(1e-12));
    CHECK(t.count[1] == 4);
    // k = 1: only record 4 has k* != 1; its k* error is 0.1.
    CHECK(*t.mrse[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.count[0] == 1);
    // k = 3: record 0 lacks an estimate; record 3 has k* = 2 with error 0.1.
    const double expected3 = (std::pow(0.0 / -0.2, 2) + 0.0 + std::pow(0.4 / 0.1, 2) + 0.0) / 4.0;
    CHECK(*t.mrse[2] == doctest::Approx(expected3).epsilon(1e-12));
  }
  SUBCASE("k* always one") {
    const auto t = sim::mrse({{0.6, 0.7}, {0.4, 0.1}}, {1, 1}, {0.5, 0.5}, 2);
    CHECK(!t.mrse[0].has_value());
    CHECK(t.count[0] == 0);
  }
  SUBCASE("zero denominators are skipped") {
    const auto t = sim::mrse({{0.5, 0.7}, {0.6, 0.8}}, {1, 1}, {0.5, 0.5}, 2);
    CHECK(t.count[1] == 1);
    CHECK(*t.mrse[1] == doctest::Approx(9.0).epsilon(1e-12));
  }
}

TEST_CASE("aggregation from records") {
  sim::SimResult r;
  r.config.k_max = 3;
  sim::ReplicationRecord a;
  a.ok = true;
  a.truth = 0.5;
  a.k_star = 2;
  a.k_max_used = 3;
  a.estimates = {0.4, 0.45, 0.6};
  a.ci_low = {0.2, 0.3, 0.55};
  a.ci_high = {0.6, 0.6, 0.65};
  sim::ReplicationRecord b = a;
  b.k_star = 1;
  b.k_max_used = 2;
  b.estimates = {0.5, 0.5, std::nan("")};
  b.ci_low = {0.45, 0.4, std::nan("")};
  b.ci_high = {0.55, 0.6, std::nan("")};
  sim::ReplicationRecord bad;
  bad.ok = false;
  r.records = {a, b, bad};
  sim::aggregate(r);
  CHECK(r.failed == 1);
  CHECK(r.grid_shrunk == 1);
  CHECK(r.kstar_hist == std::vector<int>{1, 1, 0});
  // Ratio at k* is one for each record: a at k = 2, b at k = 1.
  CHECK(*r.ci_ratio[0] == doctest::Approx((0.4 / 0.3 + 1.0) / 2));
  CHECK(*r.ci_ratio[1] == doctest::Approx((1.0 + 0.2 / 0.1) / 2));
  CHECK(*r.ci_ratio[2] == doctest::Approx(0.1 / 0.3));
  CHECK(*r.type1[0] == 0.0);
  CHECK(*r.type1[2] == 1.0);
  CHECK(*r.type1_at_kstar == 0.0);
  CHECK(*r.coverage_at_kstar == 1.0);
}

TEST_CASE("monte carlo is reproducible and thread-count independent") {
  sim::SimConfig c;
  c.replications = 24;
  c.seed = 11;
  c.threads = 1;
  const sim::SimResult a = sim::run_monte_carlo(c);
  c.threads = 4;
  const sim::SimResult b = sim::run_monte_carlo(c);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].k_star == b.records[i].k_star);
    for (std::size_t j = 0; j < a.records[i].estimates.size(); ++j) {
      CHECK(std::memcmp(&a.records[i].estimates[j], &b.records[i].estimates[j], sizeof(double)) == 0);
    }
  }
  CHECK(a.failed == 0);
  for (std::size_t j = 0; j < a.ci_ratio.size(); ++j) CHECK(a.ci_ratio[j] == b.ci_ratio[j]);
  const sim::ReplicationRecord solo = sim::run_replication(c, 5);
  CHECK(solo.estimates == a.records[5].estimates);
}

TEST_CASE("simulation path matches full select_k refits") {
  sim::SimConfig c;
  c.seed = 3;
  for (int rep = 0; rep < 5; ++rep) {
    const sim::ReplicationRecord r = sim::run_replication(c, rep);
    const sim::SimSample s = sim::generate(c, substream_seed(c.seed, static_cast<std::uint64_t>(rep)));
    const Selection sel = select_k(s.data, c.folds, r.k_max_used, c.estimand, mix64(substream_seed(c.seed, rep)));
    CHECK(sel.cv.k_star == r.k_star);
    CHECK(sel.estimate.point == r.estimates[static_cast<std::size_t>(r.k_star - 1)]);
    CHECK(sel.estimate.ci_low == r.ci_low[static_cast<std::size_t>(r.k_star - 1)]);
  }
}

TEST_CASE("small samples shrink the grid and record it") {
  sim::SimConfig c;
  c.n = 20;
  c.replications = 6;
  c.folds = 2;
  const sim::SimResult r = sim::run_monte_carlo(c);
  CHECK(r.grid_shrunk + r.failed == 6);
  for (const auto& rec : r.records) {
    if (!rec.ok) continue;
    CHECK(rec.k_max_used < 20);
    CHECK(std::isnan(rec.estimates.back()));
  }
  sim::SimConfig bad;
  bad.n = 10;
  CHECK_THROWS_AS(sim::run_monte_carlo(bad), Error);
}

TEST_CASE("interval length and size trends over the grid") {
  double t1 = 0.0, t20 = 0.0;
  for (int curve = 1; curve <= 6; ++curve) {
    sim::SimConfig c;
    c.curve = curve;
    const sim::SimResult r = sim::run_monte_carlo(c);
    std::vector<double> ks, ratio;
    for (int k = 1; k <= 20; ++k) {
      ks.push_back(k);
      ratio.push_back(*r.ci_ratio[static_cast<std::size_t>(k - 1)]);
    }
    CAPTURE(curve);
    CHECK(spearman(ks, ratio) < 0.0);
    t1 += *r.type1[0] / 6.0;
    t20 += *r.type1[19] / 6.0;
  }
  CHECK(t1 <= t20);
}
