#pragma once

#include <iosfwd>
#include <json.hpp>
#include <vector>

#include "optknn/balance.hpp"
#include "optknn/cv.hpp"
#include "optknn/estimator.hpp"
#include "optknn/sim.hpp"

namespace optknn {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "1.0.0";

nlohmann::json to_json(const EffectEstimate& estimate);
nlohmann::json to_json(const CvResult& cv);
nlohmann::json to_json(const PropensityModel& model);
nlohmann::json to_json(const BalanceReport& report);
nlohmann::json to_json(const sim::SimConfig& config);
nlohmann::json to_json(const sim::SimResult& result, bool include_records);

// covariate,statistic,critical_value,pass
void write_love_plot_csv(std::ostream& out, const BalanceReport& report);

// Long-format plot tables with one block per simulation result:
// curve,k,<metric>.
void write_mrse_csv(std::ostream& out, const std::vector<sim::SimResult>& results);
void write_ci_ratio_csv(std::ostream& out, const std::vector<sim::SimResult>& results);
void write_type1_csv(std::ostream& out, const std::vector<sim::SimResult>& results);
void write_kstar_hist_csv(std::ostream& out, const std::vector<sim::SimResult>& results);

}  // namespace optknn
