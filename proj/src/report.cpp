#include "optknn/report.hpp"

#include <cmath>
#include <ostream>

#include "optknn/csv.hpp"

namespace optknn {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Non-finite values have no JSON literal.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

json to_json(const EffectEstimate& e) {
  return json{{"estimand", to_string(e.estimand)},
              {"k", e.k},
              {"raw", e.raw},
              {"bias", e.bias},
              {"point", e.point},
              {"v_e", e.v_e},
              {"v_delta", e.v_delta},
              {"n_eff", e.n_eff},
              {"std_error", e.std_error()},
              {"alpha", e.alpha},
              {"ci", {e.ci_low, e.ci_high}}};
}

json to_json(const CvResult& cv) {
  return json{{"k_grid", cv.k_grid},
              {"mse", cv.mse},
              {"k_star", cv.k_star},
              {"per_fold_estimates", cv.per_fold_estimates},
              {"per_fold_targets", cv.per_fold_targets}};
}

json to_json(const PropensityModel& m) {
  return json{{"coefficients", std::vector<double>(m.coefficients.data(), m.coefficients.data() + m.coefficients.size())},
              {"marginal", m.marginal},
              {"converged", m.converged},
              {"separation", m.separation},
              {"iterations", m.iterations},
              {"gradient_norm", m.gradient_norm}};
}

json to_json(const BalanceReport& report) {
  json covariates = json::array();
  for (const auto& r : report.records) {
    covariates.push_back({{"name", r.name},
                          {"test", r.binary ? "proportion" : "mean"},
                          {"treated_mean", r.treated_mean},
                          {"control_mean", r.control_mean},
                          {"statistic", number(r.statistic)},
                          {"critical_value", r.critical},
                          {"pass", r.pass}});
  }
  return json{{"alpha", report.alpha}, {"pass", report.pass}, {"covariates", covariates}};
}

json to_json(const sim::SimConfig& c) {
  return json{{"n", c.n},
              {"curve", c.curve},
              {"outcome", to_string(c.outcome_kind)},
              {"estimand", to_string(c.estimand)},
              {"replications", c.replications},
              {"k_max", c.k_max},
              {"folds", c.folds},
              {"alpha", c.alpha},
              {"seed", c.seed}};
}

json to_json(const sim::SimResult& result, bool include_records) {
  json per_k = json::array();
  for (std::size_t j = 0; j < result.kstar_hist.size(); ++j) {
    per_k.push_back({{"k", j + 1},
                     {"mrse", optional_number(result.mrse.mrse[j])},
                     {"mrse_median", optional_number(result.mrse.median_ratio[j])},
                     {"s_k", result.mrse.count[j]},
                     {"ci_ratio", optional_number(result.ci_ratio[j])},
                     {"type1", optional_number(result.type1[j])},
                     {"kstar_count", result.kstar_hist[j]}});
  }
  json out{{"config", to_json(result.config)},
           {"summary",
            {{"replications", result.records.size()},
             {"failed", result.failed},
             {"grid_shrunk", result.grid_shrunk},
             {"type1_at_kstar", optional_number(result.type1_at_kstar)},
             {"coverage_at_kstar", optional_number(result.coverage_at_kstar)}}},
           {"per_k", per_k}};
  if (include_records) {
    json records = json::array();
    for (const auto& r : result.records) {
      json est = json::array(), lo = json::array(), hi = json::array();
      for (std::size_t j = 0; j < r.estimates.size(); ++j) {
        est.push_back(number(r.estimates[j]));
        lo.push_back(number(r.ci_low[j]));
        hi.push_back(number(r.ci_high[j]));
      }
      records.push_back({{"replication", r.replication},
                         {"ok", r.ok},
                         {"failure", r.failure},
                         {"truth", r.truth},
                         {"k_star", r.k_star},
                         {"k_max_used", r.k_max_used},
                         {"cv_mse", r.cv_mse},
                         {"estimates", est},
                         {"ci_low", lo},
                         {"ci_high", hi}});
    }
    out["records"] = records;
  }
  return out;
}

void write_love_plot_csv(std::ostream& out, const BalanceReport& report) {
  out << "covariate,test,statistic,critical_value,pass\n";
  for (const auto& r : report.records) {
    out << r.name << ',' << (r.binary ? "proportion" : "mean") << ',' << format_double(r.statistic) << ','
        << format_double(r.critical) << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

void write_mrse_csv(std::ostream& out, const std::vector<sim::SimResult>& results) {
  out << "curve,k,mrse,mrse_median,s_k\n";
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.mrse.mrse.size(); ++j) {
      out << r.config.curve << ',' << j + 1 << ',' << cell(r.mrse.mrse[j]) << ',' << cell(r.mrse.median_ratio[j])
          << ',' << r.mrse.count[j] << '\n';
    }
  }
}

void write_ci_ratio_csv(std::ostream& out, const std::vector<sim::SimResult>& results) {
  out << "curve,k,ci_ratio\n";
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.ci_ratio.size(); ++j) {
      out << r.config.curve << ',' << j + 1 << ',' << cell(r.ci_ratio[j]) << '\n';
    }
  }
}

void write_type1_csv(std::ostream& out, const std::vector<sim::SimResult>& results) {
  out << "curve,k,type1\n";
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.type1.size(); ++j) {
      out << r.config.curve << ',' << j + 1 << ',' << cell(r.type1[j]) << '\n';
    }
  }
}

void write_kstar_hist_csv(std::ostream& out, const std::vector<sim::SimResult>& results) {
  out << "curve,k,count\n";
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.kstar_hist.size(); ++j) {
      out << r.config.curve << ',' << j + 1 << ',' << r.kstar_hist[j] << '\n';
    }
  }
}

}  // namespace optknn
