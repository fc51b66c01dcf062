#include "fcev/harness/report.hpp"

#include <algorithm>
#include <map>

#include "fcev/common/csv.hpp"
#include "fcev/harness/policies.hpp"

namespace fcev::harness {

namespace {

constexpr int kDigits = 9;

const std::vector<std::string> kStepColumns{"t",      "v",      "p_load", "p_fc",      "p_batt",       "soc",  "u_batt",
                                            "r_batt", "i_batt", "h2_fc_cum", "h2_equiv_cum", "mode", "solve_time",
                                            "soc_clamped"};

}  // namespace

std::unique_ptr<mpc::Controller> make_controller(const StrategySpec& spec, const ControllerContext& ctx, double dt) {
    if (!ctx.plant) throw ValidationError("controller context has no plant");
    mpc::MpcConfig cfg = ctx.mpc;
    cfg.horizon = spec.horizon;
    cfg.dt = dt;
    if (spec.strategy == "tmpc") {
        cfg.validate();
        return std::make_unique<mpc::TmpcController>(ctx.plant, cfg);
    }
    if (spec.strategy == "lrmpc") {
        if (!ctx.table) throw ValidationError("lrmpc needs an explicit table");
        cfg.validate();
        return std::make_unique<mpc::LrmpcController>(ctx.plant, cfg, ctx.table);
    }
    if (spec.strategy == "rule_based") {
        ChargeSustainingController::Params p;
        p.soc_target = cfg.x_ref;
        return std::make_unique<ChargeSustainingController>(ctx.plant, p);
    }
    if (spec.strategy == "max_fc") return std::make_unique<MaxFuelCellController>(ctx.plant);
    if (spec.strategy == "exploration") {
        ExplorationController::Params p;
        p.seed = ctx.seed;
        return std::make_unique<ExplorationController>(ctx.plant, p);
    }
    throw ValidationError("unknown strategy '" + spec.strategy +
                          "' (expected tmpc, lrmpc, rule_based, max_fc or exploration)");
}

void assign_optimality(std::vector<StrategyResult>& results) {
    std::map<std::size_t, double> worst;
    for (const auto& r : results) {
        auto [it, inserted] = worst.emplace(r.spec.horizon, r.summary.h2_equiv_g);
        if (!inserted) it->second = std::max(it->second, r.summary.h2_equiv_g);
    }
    for (auto& r : results) {
        const double w = worst.at(r.spec.horizon);
        r.optimality_pct = w != 0.0 ? 100.0 * (w - r.summary.h2_equiv_g) / w : 0.0;
    }
}

ComparisonReport compare_strategies(const DrivingCycle& cycle, const SimConfig& sim, const ControllerContext& ctx,
                                    const std::vector<StrategySpec>& strategies,
                                    const velocity::VelocityModel* velocity_model, std::vector<SimResult>* runs) {
    if (strategies.empty()) throw ValidationError("compare_strategies: no strategies given");
    ComparisonReport report;
    report.cycle = cycle.name;
    report.sim = sim;
    for (const auto& spec : strategies) {
        auto controller = make_controller(spec, ctx, sim.dt);
        auto run = run_simulation(cycle, sim, *ctx.plant, *controller, velocity_model);
        report.results.push_back({spec, run.summary, 0.0});
        if (runs) runs->push_back(std::move(run));
    }
    assign_optimality(report.results);
    return report;
}

nlohmann::json ComparisonReport::to_json(bool mask_timing) const {
    auto time = [&](double t) { return mask_timing ? 0.0 : t; };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        const auto& s = r.summary;
        rows.push_back({{"strategy", r.spec.strategy},
                        {"horizon", r.spec.horizon},
                        {"h2_equiv_g", s.h2_equiv_g},
                        {"h2_fc_g", s.h2_fc_g},
                        {"final_soc", s.final_soc},
                        {"optimality_pct", r.optimality_pct},
                        {"total_sim_time_s", time(s.sim_wall_time)},
                        {"mean_step_solve_time_s", time(s.mean_solve_time)},
                        {"max_step_solve_time_s", time(s.max_solve_time)},
                        {"steps", s.steps},
                        {"controller_steps", s.controller_steps},
                        {"hev_steps", s.hev_steps},
                        {"relaxed_steps", s.relaxed_steps},
                        {"clamped_steps", s.clamped_steps},
                        {"max_balance_residual", s.max_balance_residual}});
    }
    return {{"version", kReportVersion}, {"cycle", cycle}, {"sim", sim.to_json()}, {"results", rows}};
}

std::string step_log_text(std::span<const StepRecord> records, bool mask_timing) {
    std::string out;
    for (std::size_t i = 0; i < kStepColumns.size(); ++i) out += (i ? "," : "") + kStepColumns[i];
    out += '\n';
    auto f = [](double v) { return csv::fmt(v, kDigits); };
    for (const auto& r : records) {
        out += f(r.t) + ',' + f(r.v) + ',' + f(r.p_load) + ',' + f(r.p_fc) + ',' + f(r.p_batt) + ',' + f(r.soc) + ',' +
               f(r.u_batt) + ',' + f(r.r_batt) + ',' + f(r.i_batt) + ',' + f(r.h2_fc_cum) + ',' + f(r.h2_equiv_cum) +
               ',' + std::string(to_string(r.mode)) + ',' + f(mask_timing ? 0.0 : r.solve_time) + ',' +
               (r.soc_clamped ? "1" : "0") + '\n';
    }
    return out;
}

void write_step_log(const std::filesystem::path& path, std::span<const StepRecord> records, bool mask_timing) {
    csv::write_text(path, step_log_text(records, mask_timing));
}

std::vector<StepRecord> parse_step_log(const std::string& text) {
    std::vector<StepRecord> out;
    std::size_t pos = 0, row = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        if (row == 1) {
            if (cells != kStepColumns) throw ParseError("step log: unexpected header", 1);
            continue;
        }
        if (cells.size() != kStepColumns.size())
            throw ParseError("step log: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                 " fields",
                             row);
        std::array<double, 14> v{};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == 11) continue;
            try {
                std::size_t used = 0;
                v[i] = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError("step log: row " + std::to_string(row) + ": bad number '" + cells[i] + "'", row);
            }
        }
        if (cells[11] != "ev" && cells[11] != "hev")
            throw ParseError("step log: row " + std::to_string(row) + ": mode must be ev or hev", row);
        StepRecord r;
        r.t = v[0];
        r.v = v[1];
        r.p_load = v[2];
        r.p_fc = v[3];
        r.p_batt = v[4];
        r.soc = v[5];
        r.u_batt = v[6];
        r.r_batt = v[7];
        r.i_batt = v[8];
        r.h2_fc_cum = v[9];
        r.h2_equiv_cum = v[10];
        r.mode = cells[11] == "ev" ? DriveMode::ev : DriveMode::hev;
        r.solve_time = v[12];
        r.soc_clamped = v[13] != 0.0;
        out.push_back(r);
    }
    if (row == 0) throw ParseError("step log: empty file", 1);
    return out;
}

std::vector<StepRecord> read_step_log(const std::filesystem::path& path) {
    try {
        return parse_step_log(csv::read_text(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.row());
    }
}

void write_report(const std::filesystem::path& path, const ComparisonReport& report, bool mask_timing) {
    csv::write_text(path, report.to_json(mask_timing).dump(2) + "\n");
}

std::string sweep_csv_text(const ComparisonReport& report, bool mask_timing) {
    std::string out = "strategy,horizon,h2_equiv_g,optimality_pct,total_sim_time_s,mean_step_solve_time_s\n";
    auto f = [](double v) { return csv::fmt(v, kDigits); };
    for (const auto& r : report.results) {
        const auto& s = r.summary;
        out += r.spec.strategy + ',' + std::to_string(r.spec.horizon) + ',' + f(s.h2_equiv_g) + ',' +
               f(r.optimality_pct) + ',' + f(mask_timing ? 0.0 : s.sim_wall_time) + ',' +
               f(mask_timing ? 0.0 : s.mean_solve_time) + '\n';
    }
    return out;
}

void write_sweep_csv(const std::filesystem::path& path, const ComparisonReport& report, bool mask_timing) {
    csv::write_text(path, sweep_csv_text(report, mask_timing));
}

}  // namespace fcev::harness
