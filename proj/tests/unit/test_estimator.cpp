#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "estimator_oracle.hpp"
#include "helpers.hpp"
#include "optknn/error.hpp"
#include "optknn/estimator.hpp"
#include "optknn/sim.hpp"

using namespace optknn;

namespace {

Dataset pairs_dataset(const std::vector<double>& x, double effect) {
  // Every treated unit 2i has a control twin 2i+1 at the same covariate.
  const Index n = 2 * x.size();
  RowMatrix m(n, 1);
  std::vector<int> d(n);
  std::vector<double> y(n);
  for (Index i = 0; i < x.size(); ++i) {
    m(2 * i, 0) = m(2 * i + 1, 0) = x[i];
    d[2 * i] = 1;
    d[2 * i + 1] = 0;
    y[2 * i + 1] = 1.0 + 3.0 * x[i] + 0.1 * std::sin(7.0 * x[i]);
    y[2 * i] = y[2 * i + 1] + effect;
  }
  return Dataset(std::move(m), std::move(d), std::move(y));
}

}  // namespace

TEST_CASE("matching_atet examples") {
  RowMatrix x(3, 1);
  x << 1, 1, 9;
  const Dataset ds(x, {1, 0, 0}, {3, 1, 5});
  const IndexList t{0}, c{1, 2};
  CHECK(matching_atet(ds, find_matches(ds, t, c, 1)) == 2.0);
  CHECK(matching_atet(ds, find_matches(ds, t, c, 2)) == 0.0);
  MatchSet empty = find_matches(ds, IndexList{}, c, 1);
  try {
    matching_atet(ds, empty);
    FAIL("expected no-treated error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTreated);
  }
}

TEST_CASE("outcome regression") {
  RowMatrix x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  const Dataset lin(x, {1, 0, 1, 0, 0, 0}, {0, 5, 0, 11, 14, 17});
  const OutcomeRegression r = fit_outcome_regression(lin, Arm::Control);
  CHECK(r.coefficients()[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.coefficients()[1] == doctest::Approx(3.0).epsilon(1e-10));
  const Dataset flat = lin.with_outcome({0, 4, 0, 4, 4, 4});
  const OutcomeRegression f = fit_outcome_regression(flat, Arm::Control);
  CHECK(f.coefficients()[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::fabs(f.coefficients()[1]) < 1e-12);

  const IndexList wrong{0, 1};
  const auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code([&] { fit_outcome_regression(lin, Arm::Control, wrong); }) == ErrorCode::InvalidArgument);
  CHECK(code([&] { fit_outcome_regression(lin, Arm::Treated, IndexList{0}); }) == ErrorCode::InsufficientData);
  RowMatrix same(6, 1);
  same << 0, 2, 0, 2, 2, 2;
  CHECK(code([&] { fit_outcome_regression(Dataset(same, lin.treatment(), lin.outcome()), Arm::Control); }) ==
        ErrorCode::SingularDesign);

  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset ds = testing::random_dataset(gen, 40, 1 + gen() % 5);
    for (int d : {0, 1}) {
      const auto units = testing::arm(ds, d);
      if (units.size() < ds.dims() + 2) continue;
      const auto b = testing::affine_fit(ds, units);
      const OutcomeRegression reg = fit_outcome_regression(ds, d ? Arm::Treated : Arm::Control, units);
      for (std::size_t j = 0; j < b.size(); ++j) {
        CHECK(std::fabs(reg.coefficients()[static_cast<Eigen::Index>(j)] - b[j]) < 1e-10);
      }
    }
  }
}

TEST_CASE("conditional variance examples") {
  RowMatrix x(4, 1);
  x << 0, 3, 3, 0;
  const Dataset ds(x, {1, 0, 0, 1}, {7, 0, 2, 7});
  const auto s = conditional_variance(ds, 1);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == 2.0);
  CHECK(s[0] == 0.0);
  CHECK(s[3] == 0.0);
}

TEST_CASE("estimator agrees with the brute-force oracle") {
  std::mt19937_64 gen(101);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 16 + gen() % 35;
    const Index p = 1 + gen() % 5;
    const Dataset ds = testing::random_dataset(gen, n, p);
    if (std::min(ds.n_treated(), ds.n_control()) < p + 2) continue;
    for (Estimand e : {Estimand::ATET, Estimand::ATE}) {
      const int k = 1 + static_cast<int>(gen() % static_cast<unsigned>(max_feasible_k(ds, e)));
      const EffectEstimate est = bias_corrected_effect(ds, k, e);
      const testing::OracleResult o = testing::oracle(ds, k, e);
      CAPTURE(rep);
      CHECK(std::fabs(est.raw - o.raw) <= 1e-10);
      CHECK(std::fabs(est.bias - o.bias) <= 1e-10);
      CHECK(std::fabs(est.point - (o.raw - o.bias)) <= 1e-10);
      CHECK(std::fabs(est.v_e - o.v_e) <= 1e-10);
      CHECK(std::fabs(est.v_delta - o.v_delta) <= 1e-10);
      CHECK(est.point == est.raw - est.bias);
      CHECK(est.v_e >= 0.0);
      CHECK(est.v_delta >= 0.0);
      CHECK(est.n_eff == (e == Estimand::ATET ? ds.n_treated() : ds.size()));
      const auto sigma2 = conditional_variance(ds, k);
      for (Index i = 0; i < n; ++i) CHECK(std::fabs(sigma2[i] - o.sigma2[i]) <= 1e-10);
      const double half = 1.959963984540054 * std::sqrt((o.v_e + o.v_delta) / est.n_eff);
      CHECK(std::fabs((est.ci_high - est.point) - half) <= 1e-10);
      CHECK(est.ci_high - est.point == doctest::Approx(est.point - est.ci_low).epsilon(1e-12));
    }
  }
}

TEST_CASE("effect path prefixes equal direct estimates") {
  std::mt19937_64 gen(7);
  const Dataset ds = testing::random_dataset(gen, 60, 3);
  for (Estimand e : {Estimand::ATET, Estimand::ATE}) {
    const int kmax = std::min(10, max_feasible_k(ds, e));
    const EffectPath path(ds, kmax, e);
    for (int k = 1; k <= kmax; ++k) {
      const EffectEstimate a = path.at(k, 0.05), b = bias_corrected_effect(ds, k, e);
      CHECK(a.point == b.point);
      CHECK(a.ci_low == b.ci_low);
      CHECK(a.ci_high == b.ci_high);
    }
  }
  CHECK_THROWS_AS(bias_corrected_effect(ds, max_feasible_k(ds, Estimand::ATET) + 1, Estimand::ATET), Error);
}

TEST_CASE("confidence interval examples") {
  auto [lo, hi] = confidence_interval(1.5, 0.0, 10, 0.05);
  CHECK(lo == 1.5);
  CHECK(hi == 1.5);
  std::tie(lo, hi) = confidence_interval(0.0, 1.0, 100, 0.05);
  CHECK(lo == doctest::Approx(-0.196).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.196).epsilon(1e-3));
  std::tie(lo, hi) = confidence_interval(0.0, 1.0, 1, 0.32);
  CHECK(hi == doctest::Approx(0.9945).epsilon(1e-4));
  CHECK(lo == -hi);
  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 1, 1.0), Error);
}

TEST_CASE("exact-match designs have zero bias") {
  const Dataset ds = pairs_dataset({0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0, 1.3}, 2.0);
  for (Estimand e : {Estimand::ATET, Estimand::ATE}) {
    const EffectEstimate est = bias_corrected_effect(ds, 1, e);
    CHECK(est.bias == 0.0);
    CHECK(est.point == est.raw);
    CHECK(est.point == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("outcome translation and scale equivariance") {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = testing::random_dataset(gen, 50, 3);
    for (Estimand e : {Estimand::ATET, Estimand::ATE}) {
      const int k = std::min(4, max_feasible_k(ds, e));
      const EffectEstimate base = bias_corrected_effect(ds, k, e);
      std::vector<double> shifted = ds.outcome(), scaled = ds.outcome();
      for (auto& y : shifted) y += 12.5;
      for (auto& y : scaled) y *= -3.0;
      const EffectEstimate s = bias_corrected_effect(ds.with_outcome(shifted), k, e);
      const EffectEstimate m = bias_corrected_effect(ds.with_outcome(scaled), k, e);
      CHECK(s.point == doctest::Approx(base.point).epsilon(1e-10));
      CHECK(s.ci_length() == doctest::Approx(base.ci_length()).epsilon(1e-10));
      CHECK(m.point == doctest::Approx(-3.0 * base.point).epsilon(1e-10));
      CHECK(m.ci_length() == doctest::Approx(3.0 * base.ci_length()).epsilon(1e-10));
    }
  }
}

TEST_CASE("standardized estimates ignore covariate units") {
  std::mt19937_64 gen(19);
  const Dataset ds = testing::random_dataset(gen, 60, 3);
  RowMatrix x = ds.covariates();
  x.col(0) *= 1000.0;
  x.col(2) = x.col(2).array() * 0.01 + 5.0;
  const Dataset rescaled(x, ds.treatment(), ds.outcome());
  EstimatorOptions opt;
  opt.standardize = true;
  for (Estimand e : {Estimand::ATET, Estimand::ATE}) {
    const EffectEstimate a = bias_corrected_effect(ds, 3, e, 0.05, opt);
    const EffectEstimate b = bias_corrected_effect(rescaled, 3, e, 0.05, opt);
    CHECK(a.point == doctest::Approx(b.point).epsilon(1e-9));
    CHECK(a.ci_length() == doctest::Approx(b.ci_length()).epsilon(1e-9));
  }
}

TEST_CASE("ATE and ATET coincide on a symmetric constant-effect design") {
  // Covariates drawn independently of treatment, so both estimands target
  // the same constant effect.
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> eps(0, 0.1);
  double diff = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const Index n = 200;
    RowMatrix x(n, 2);
    std::vector<int> d(n);
    std::vector<double> y(n);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = u(gen);
      x(i, 1) = u(gen);
      d[i] = i % 2;
      y[i] = x(i, 0) + 2.0 * x(i, 1) + 0.7 * d[i] + eps(gen);
    }
    const Dataset ds(x, d, y);
    diff += bias_corrected_effect(ds, 3, Estimand::ATE).point - bias_corrected_effect(ds, 3, Estimand::ATET).point;
  }
  CHECK(std::fabs(diff / reps) < 0.01);
}

TEST_CASE("continuous design at k = 4 covers the truth") {
  int covered = 0;
  for (int r = 0; r < 200; ++r) {
    const sim::SimSample s = sim::generate_continuous(100, 1, 1000 + static_cast<std::uint64_t>(r));
    const EffectEstimate est = bias_corrected_effect(s.data, 4, Estimand::ATET);
    if (est.ci_low <= 0.5 && 0.5 <= est.ci_high) ++covered;
  }
  CHECK(covered >= 180);
}
