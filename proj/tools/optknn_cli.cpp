// optknn: k-nearest-neighbour matching estimates of treatment effects with
// cross-validated choice of k, plus the Monte Carlo replication harness.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optknn/balance.hpp"
#include "optknn/csv.hpp"
#include "optknn/cv.hpp"
#include "optknn/error.hpp"
#include "optknn/estimator.hpp"
#include "optknn/matching.hpp"
#include "optknn/report.hpp"
#include "optknn/sim.hpp"
#include "optknn/simd/distance_kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace optknn;

namespace {

struct EstimateArgs {
  std::string csv;
  std::string treatment = "d";
  std::string outcome = "y";
  std::vector<std::string> covariates;
  std::string estimand = "atet";
  std::optional<int> k;
  int k_max = 20;
  int folds = 5;
  double alpha = 0.05;
  bool standardize = false;
  bool refit_per_fold = false;
  std::uint64_t seed = 1;
  std::string outcome_kind = "auto";
  int series_order = 1;
  std::string out_dir = ".";
  bool record_timing = false;
};

struct SimulateArgs {
  std::string curve = "1";
  std::string outcome = "continuous";
  std::string estimand = "atet";
  int n = 100;
  int reps = 200;
  int k_max = 20;
  int folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = ".";
  bool records = false;
  bool record_timing = false;
};

struct GenerateArgs {
  std::string outcome = "continuous";
  int curve = 1;
  int n = 100;
  std::uint64_t seed = 1;
  std::string out = "sample.csv";
};

Estimand parse_estimand(const std::string& s) { return s == "ate" ? Estimand::ATE : Estimand::ATET; }
OutcomeKind parse_outcome(const std::string& s) {
  return s == "binary" ? OutcomeKind::Binary : OutcomeKind::Continuous;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json manifest(const std::string& command, json options, std::uint64_t seed, const std::string& digest,
              std::optional<double> elapsed_ms) {
  json m{{"schema_version", kSchemaVersion},
         {"command", command},
         {"options", std::move(options)},
         {"seed", seed},
         {"library_version", kLibraryVersion},
         {"input_digest", digest.empty() ? json(nullptr) : json("sha256:" + digest)},
         {"simd_isa", std::string(simd::to_string(simd::active_isa()))}};
  m["timing_ms"] = elapsed_ms ? json(*elapsed_ms) : json(nullptr);
  return m;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

int run_estimate(const EstimateArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  const std::string bytes = read_file_bytes(a.csv);
  std::istringstream stream(bytes);
  const CsvTable table = read_csv(stream);

  ColumnSpec columns{a.treatment, a.outcome, a.covariates, std::nullopt};
  if (columns.covariates.empty()) {
    for (const auto& name : table.header) {
      if (name != a.treatment && name != a.outcome) columns.covariates.push_back(name);
    }
  }
  if (a.outcome_kind != "auto") columns.outcome_kind = parse_outcome(a.outcome_kind);
  const Dataset data = dataset_from_csv(table, columns);
  const Estimand estimand = parse_estimand(a.estimand);

  CvOptions options;
  options.estimator.standardize = a.standardize;
  options.estimator.series_order = a.series_order;
  options.refit_propensity_per_fold = a.refit_per_fold;

  json result{{"schema_version", kSchemaVersion}, {"command", "estimate"}};
  EffectEstimate estimate;
  if (a.k) {
    const PropensityModel propensity = fit_logit(data, options.logit);
    estimate = bias_corrected_effect(data, *a.k, estimand, a.alpha, options.estimator);
    result["propensity"] = to_json(propensity);
    result["cv"] = nullptr;
  } else {
    // Small files cannot support the default grid; search what they can.
    const FoldAssignment folds = stratified_folds(data, a.folds, a.seed);
    const int k_max = std::min(a.k_max, max_feasible_cv_k(data, folds, estimand));
    if (k_max < 1) throw Error(ErrorCode::InfeasibleK, "no k is feasible with these folds");
    if (k_max < a.k_max) {
      std::cerr << "note: --k-max " << a.k_max << " reduced to " << k_max << ", the largest k every fold supports\n";
    }
    result["k_max_requested"] = a.k_max;
    result["k_max_used"] = k_max;
    const Selection sel = select_k(data, a.folds, k_max, estimand, a.seed, a.alpha, options);
    estimate = sel.estimate;
    result["propensity"] = to_json(sel.propensity);
    result["cv"] = to_json(sel.cv);
  }
  result["estimate"] = to_json(estimate);
  result["dataset"] = {{"n", data.size()},
                       {"n_treated", data.n_treated()},
                       {"n_control", data.n_control()},
                       {"covariates", data.covariate_names()},
                       {"outcome_kind", to_string(data.outcome_kind())}};

  const Dataset search = a.standardize ? data.standardized() : data;
  const BalanceReport balance = balance_report(data, match_treated_to_controls(search, estimate.k), a.alpha);
  result["balance"] = to_json(balance);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_json(dir / "result.json", result);
  std::ostringstream love;
  write_love_plot_csv(love, balance);
  write_text(dir / "balance.csv", love.str());

  json opts{{"csv", a.csv},
            {"treatment", a.treatment},
            {"outcome", a.outcome},
            {"covariates", columns.covariates},
            {"estimand", a.estimand},
            {"k", a.k ? json(*a.k) : json(nullptr)},
            {"k_max", a.k_max},
            {"folds", a.folds},
            {"alpha", a.alpha},
            {"standardize", a.standardize},
            {"refit_propensity_per_fold", a.refit_per_fold},
            {"outcome_kind", a.outcome_kind},
            {"series_order", a.series_order}};
  write_json(dir / "manifest.json",
             manifest("estimate", opts, a.seed, sha256_hex(bytes),
                      a.record_timing ? std::optional<double>(elapsed_ms(start)) : std::nullopt));

  std::cout << to_string(estimand) << " k=" << estimate.k << " point=" << format_double(estimate.point) << " ci=["
            << format_double(estimate.ci_low) << ", " << format_double(estimate.ci_high) << "]\n";
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<int> curves;
  if (a.curve == "all") {
    curves = {1, 2, 3, 4, 5, 6};
  } else {
    int c = 0;
    try {
      c = std::stoi(a.curve);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--curve must be 1..6 or all");
    }
    curves = {c};
  }
  std::vector<sim::SimResult> results;
  json all = json::array();
  for (int curve : curves) {
    sim::SimConfig config;
    config.n = a.n;
    config.curve = curve;
    config.outcome_kind = parse_outcome(a.outcome);
    config.estimand = parse_estimand(a.estimand);
    config.replications = a.reps;
    config.k_max = a.k_max;
    config.folds = a.folds;
    config.alpha = a.alpha;
    config.seed = a.seed;
    config.threads = a.threads;
    results.push_back(sim::run_monte_carlo(config));
    all.push_back(to_json(results.back(), a.records));
    std::cerr << "curve " << curve << ": " << results.back().records.size() - results.back().failed
              << " replications ok\n";
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_json(dir / "sim_result.json", json{{"schema_version", kSchemaVersion}, {"command", "simulate"}, {"results", all}});
  const auto csv = [&](const char* name, auto writer) {
    std::ostringstream out;
    writer(out, results);
    write_text(dir / name, out.str());
  };
  csv("mrse.csv", write_mrse_csv);
  csv("ci_ratio.csv", write_ci_ratio_csv);
  csv("type1.csv", write_type1_csv);
  csv("kstar_hist.csv", write_kstar_hist_csv);

  json opts{{"curve", a.curve}, {"outcome", a.outcome}, {"estimand", a.estimand}, {"n", a.n},
            {"reps", a.reps},   {"k_max", a.k_max},     {"folds", a.folds},       {"alpha", a.alpha},
            {"records", a.records}};
  write_json(dir / "manifest.json", manifest("simulate", opts, a.seed, "",
                                             a.record_timing ? std::optional<double>(elapsed_ms(start)) : std::nullopt));
  return 0;
}

json read_json_file(const std::string& path) {
  const std::string text = read_file_bytes(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

// Re-runs the command recorded in a manifest with the same options and seed.
int run_replay(const std::string& manifest_path, const std::string& out_dir, const std::optional<std::string>& csv) {
  const json m = read_json_file(manifest_path);
  try {
    const std::string command = m.at("command");
    const json& o = m.at("options");
    const auto seed = m.at("seed").get<std::uint64_t>();
    if (command == "estimate") {
      EstimateArgs a;
      a.csv = csv.value_or(o.at("csv").get<std::string>());
      const std::string digest = "sha256:" + sha256_hex(read_file_bytes(a.csv));
      if (m.at("input_digest") != digest) {
        throw Error(ErrorCode::InvalidArgument, a.csv + " does not match the input digest in " + manifest_path);
      }
      a.treatment = o.at("treatment");
      a.outcome = o.at("outcome");
      a.covariates = o.at("covariates").get<std::vector<std::string>>();
      a.estimand = o.at("estimand");
      if (!o.at("k").is_null()) a.k = o.at("k").get<int>();
      a.k_max = o.at("k_max");
      a.folds = o.at("folds");
      a.alpha = o.at("alpha");
      a.standardize = o.at("standardize");
      a.refit_per_fold = o.at("refit_propensity_per_fold");
      a.outcome_kind = o.at("outcome_kind");
      a.series_order = o.at("series_order");
      a.seed = seed;
      a.out_dir = out_dir;
      return run_estimate(a);
    }
    if (command == "simulate") {
      SimulateArgs a;
      a.curve = o.at("curve");
      a.outcome = o.at("outcome");
      a.estimand = o.at("estimand");
      a.n = o.at("n");
      a.reps = o.at("reps");
      a.k_max = o.at("k_max");
      a.folds = o.at("folds");
      a.alpha = o.at("alpha");
      a.records = o.at("records");
      a.seed = seed;
      a.out_dir = out_dir;
      return run_simulate(a);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "' in " + manifest_path);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, manifest_path + ": " + e.what());
  }
}

int run_generate(const GenerateArgs& a) {
  const sim::SimSample s = a.outcome == "binary" ? sim::generate_binary(a.n, a.curve, a.seed)
                                                 : sim::generate_continuous(a.n, a.curve, a.seed);
  std::ostringstream out;
  write_dataset_csv(out, s.data);
  write_text(a.out, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-nearest-neighbour matching estimates of average treatment effects"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate ATET or ATE from a CSV file");
  estimate->add_option("csv", est.csv, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
  estimate->add_option("--treatment", est.treatment, "Treatment column (0/1)")->capture_default_str();
  estimate->add_option("--outcome", est.outcome, "Outcome column")->capture_default_str();
  estimate->add_option("--covariates", est.covariates, "Covariate columns (default: all others)")->delimiter(',');
  estimate->add_option("--estimand", est.estimand)->check(CLI::IsMember({"atet", "ate"}))->capture_default_str();
  estimate->add_option("--k", est.k, "Fixed number of matches; skips cross-validation")->check(CLI::PositiveNumber);
  estimate->add_option("--k-max", est.k_max, "Largest k in the cross-validation grid")
      ->check(CLI::PositiveNumber)->capture_default_str();
  estimate->add_option("--folds", est.folds)->check(CLI::Range(2, 1000))->capture_default_str();
  estimate->add_option("--alpha", est.alpha)->check(CLI::Range(1e-12, 1.0 - 1e-12))->capture_default_str();
  estimate->add_flag("--standardize", est.standardize, "z-score covariates before matching");
  estimate->add_flag("--refit-propensity-per-fold", est.refit_per_fold,
                     "Refit the propensity model on each training fold");
  estimate->add_option("--seed", est.seed)->capture_default_str();
  estimate->add_option("--outcome-kind", est.outcome_kind)
      ->check(CLI::IsMember({"auto", "continuous", "binary"}))->capture_default_str();
  estimate->add_option("--series-order", est.series_order, "1: affine bias regression, 2: add squares")
      ->check(CLI::Range(1, 2))->capture_default_str();
  estimate->add_option("--out-dir", est.out_dir)->capture_default_str();
  estimate->add_flag("--record-timing", est.record_timing, "Store wall time in manifest.json");

  SimulateArgs simargs;
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo study");
  simulate->add_option("--curve", simargs.curve, "Response curve 1..6 or all")->capture_default_str();
  simulate->add_option("--outcome", simargs.outcome)
      ->check(CLI::IsMember({"continuous", "binary"}))->capture_default_str();
  simulate->add_option("--estimand", simargs.estimand)->check(CLI::IsMember({"atet", "ate"}))->capture_default_str();
  simulate->add_option("--n", simargs.n)->check(CLI::Range(20, 10000000))->capture_default_str();
  simulate->add_option("--reps", simargs.reps)->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--k-max", simargs.k_max)->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--folds", simargs.folds)->check(CLI::Range(2, 1000))->capture_default_str();
  simulate->add_option("--alpha", simargs.alpha)->check(CLI::Range(1e-12, 1.0 - 1e-12))->capture_default_str();
  simulate->add_option("--seed", simargs.seed)->capture_default_str();
  simulate->add_option("--threads", simargs.threads, "Worker threads (0: all cores)")->capture_default_str();
  simulate->add_option("--out-dir", simargs.out_dir)->capture_default_str();
  simulate->add_flag("--records", simargs.records, "Include per-replication records in the JSON");
  simulate->add_flag("--record-timing", simargs.record_timing, "Store wall time in manifest.json");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write one simulated sample as CSV");
  generate->add_option("--outcome", gen.outcome)->check(CLI::IsMember({"continuous", "binary"}))->capture_default_str();
  generate->add_option("--curve", gen.curve)->check(CLI::Range(1, 6))->capture_default_str();
  generate->add_option("--n", gen.n)->check(CLI::Range(20, 10000000))->capture_default_str();
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--out", gen.out)->capture_default_str();

  std::string manifest_path;
  std::string replay_out = ".";
  std::optional<std::string> replay_csv;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest.json");
  replay->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
  replay->add_option("--out-dir", replay_out)->capture_default_str();
  replay->add_option("--csv", replay_csv, "Input CSV location, if it moved since the original run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) return run_estimate(est);
    if (simulate->parsed()) return run_simulate(simargs);
    if (generate->parsed()) return run_generate(gen);
    if (replay->parsed()) return run_replay(manifest_path, replay_out, replay_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
