#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcev/harness/simulation.hpp"
#include "fcev/learning/explicit_table.hpp"

namespace fcev::harness {

/// strategy: tmpc | lrmpc | rule_based | max_fc | exploration
struct StrategySpec {
    std::string strategy;
    std::size_t horizon = 1;
};

struct ControllerContext {
    std::shared_ptr<const powertrain::Powertrain> plant;
    mpc::MpcConfig mpc;
    std::shared_ptr<const learning::ExplicitTable> table;  // required by lrmpc
    std::uint64_t seed = 1;
};

/// MPC strategies take the context's MpcConfig with the spec's horizon and
/// the given sim dt. Throws ValidationError for unknown names or a missing table.
std::unique_ptr<mpc::Controller> make_controller(const StrategySpec& spec, const ControllerContext& ctx, double dt);

struct StrategyResult {
    StrategySpec spec;
    SimSummary summary;
    double optimality_pct = 0.0;  // 100 (worst - this) / worst among runs with the same horizon
};

struct ComparisonReport {
    std::string cycle;
    SimConfig sim;
    std::vector<StrategyResult> results;

    /// Timing fields are written as 0 when `mask_timing` is set.
    nlohmann::json to_json(bool mask_timing = false) const;
};

inline constexpr int kReportVersion = 1;

/// Runs every strategy on the same cycle and settings, one after another.
/// `runs`, when given, receives each simulation in order.
ComparisonReport compare_strategies(const DrivingCycle& cycle, const SimConfig& sim, const ControllerContext& ctx,
                                    const std::vector<StrategySpec>& strategies,
                                    const velocity::VelocityModel* velocity_model = nullptr,
                                    std::vector<SimResult>* runs = nullptr);

/// Fills optimality_pct in place.
void assign_optimality(std::vector<StrategyResult>& results);

/// StepRecord columns in declaration order, 9 significant digits.
std::string step_log_text(std::span<const StepRecord> records, bool mask_timing = false);
void write_step_log(const std::filesystem::path& path, std::span<const StepRecord> records, bool mask_timing = false);
std::vector<StepRecord> parse_step_log(const std::string& text);
std::vector<StepRecord> read_step_log(const std::filesystem::path& path);

void write_report(const std::filesystem::path& path, const ComparisonReport& report, bool mask_timing = false);
/// One row per (strategy, horizon): hydrogen and optimality, then timing.
std::string sweep_csv_text(const ComparisonReport& report, bool mask_timing = false);
void write_sweep_csv(const std::filesystem::path& path, const ComparisonReport& report, bool mask_timing = false);

}  // namespace fcev::harness
