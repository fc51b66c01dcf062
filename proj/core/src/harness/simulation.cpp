#include "fcev/harness/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fcev::harness {

namespace {

ModeRule mode_rule_from(const std::string& s) {
    if (s == "hysteresis") return ModeRule::hysteresis;
    if (s == "always_ev") return ModeRule::always_ev;
    if (s == "always_hev") return ModeRule::always_hev;
    throw ValidationError("unknown mode_rule '" + s + "'");
}

std::string to_string(ModeRule r) {
    switch (r) {
        case ModeRule::hysteresis: return "hysteresis";
        case ModeRule::always_ev: return "always_ev";
        case ModeRule::always_hev: return "always_hev";
    }
    return "";
}

Preview preview_from(const std::string& s) {
    if (s == "oracle") return Preview::oracle;
    if (s == "predictor") return Preview::predictor;
    if (s == "constant") return Preview::constant;
    throw ValidationError("unknown preview '" + s + "'");
}

std::string to_string(Preview p) {
    switch (p) {
        case Preview::oracle: return "oracle";
        case Preview::predictor: return "predictor";
        case Preview::constant: return "constant";
    }
    return "";
}

double bus_demand(const powertrain::Powertrain& plant, double v, double a) {
    return std::max(plant.electrical_demand(v, a).p_load, plant.battery.p_charge_min);
}

// Future velocities for the controller horizon.
class VelocityPreview {
public:
    VelocityPreview(const DrivingCycle& cycle, Preview mode, const velocity::VelocityModel* model)
        : cycle_(cycle), mode_(mode), model_(model) {
        if (mode_ == Preview::predictor) {
            if (!model_) throw ValidationError("predictor preview needs a velocity model");
            const double per = model_->stride() / cycle.dt;
            per_stride_ = static_cast<std::size_t>(std::llround(per));
            if (per_stride_ == 0 || std::abs(static_cast<double>(per_stride_) - per) > 1e-9)
                throw ValidationError("velocity model stride must be a multiple of dt");
        }
    }

    // Velocity at step index k + j (j >= 0) as seen from step k.
    double at(std::size_t k, std::size_t j, std::size_t horizon) {
        if (mode_ == Preview::oracle) return cycle_.v[std::min(k + j, cycle_.size() - 1)];
        if (k - k % per_stride_ != anchor_) refresh(k, horizon);
        const double s = static_cast<double>(k + j - anchor_) / static_cast<double>(per_stride_);
        auto lo = static_cast<std::size_t>(std::floor(s));
        lo = std::min(lo, grid_.size() - 2);
        return grid_[lo] + (s - static_cast<double>(lo)) * (grid_[lo + 1] - grid_[lo]);
    }

private:
    void refresh(std::size_t k, std::size_t horizon) {
        anchor_ = k - k % per_stride_;
        const std::size_t need = model_->history_length();
        const std::size_t base = anchor_ / per_stride_;
        std::vector<double> history(need);
        for (std::size_t i = 0; i < need; ++i) {
            const std::size_t back = need - 1 - i;
            history[i] = cycle_.v[back > base ? 0 : (base - back) * per_stride_];
        }
        const auto strides = (horizon + 2 * per_stride_) / per_stride_;
        const auto pred = model_->predict_horizon(history, strides, model_->stride());
        grid_.assign(1, history.back());
        grid_.insert(grid_.end(), pred.begin(), pred.end());
    }

    const DrivingCycle& cycle_;
    Preview mode_;
    const velocity::VelocityModel* model_;
    std::size_t per_stride_ = 1;
    std::size_t anchor_ = SIZE_MAX;
    std::vector<double> grid_;
};

nlohmann::json dump(const DrivingCycle& cycle, std::size_t k, double soc, DriveMode mode, double p_load, double p_fc,
                    double p_batt, const mpc::OperatingPoint& z, const mpc::Controller& controller) {
    return {{"cycle", cycle.name}, {"step", k},         {"t", cycle.time(k)},  {"v", cycle.v[k]},
            {"soc", soc},          {"mode", to_string(mode)}, {"p_load", p_load}, {"p_fc", p_fc},
            {"p_batt", p_batt},    {"z_u_batt", z.u_batt},   {"z_r_batt", z.r_batt}, {"z_p_fc", z.p_fc},
            {"controller", controller.name()}};
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw ValidationError("sim: dt must be positive");
    if (!(soc_hev_on > 0.0 && soc_hev_on < soc_hev_off && soc_hev_off < 1.0))
        throw ValidationError("sim: need 0 < soc_hev_on < soc_hev_off < 1");
    if (!(initial_soc > 0.0 && initial_soc < 1.0)) throw ValidationError("sim: initial_soc must lie in (0, 1)");
    if (!(equivalence_factor >= 0.0)) throw ValidationError("sim: equivalence_factor must be nonnegative");
}

nlohmann::json SimConfig::to_json() const {
    return {{"dt", dt},
            {"initial_soc", initial_soc},
            {"soc_hev_on", soc_hev_on},
            {"soc_hev_off", soc_hev_off},
            {"mode_rule", to_string(mode_rule)},
            {"preview", to_string(preview)},
            {"equivalence_factor", equivalence_factor},
            {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j, SimConfig base) {
    SimConfig c = base;
    c.dt = j.value("dt", c.dt);
    c.initial_soc = j.value("initial_soc", c.initial_soc);
    c.soc_hev_on = j.value("soc_hev_on", c.soc_hev_on);
    c.soc_hev_off = j.value("soc_hev_off", c.soc_hev_off);
    if (j.contains("mode_rule")) c.mode_rule = mode_rule_from(j.at("mode_rule").get<std::string>());
    if (j.contains("preview")) c.preview = preview_from(j.at("preview").get<std::string>());
    c.equivalence_factor = j.value("equivalence_factor", c.equivalence_factor);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

SimConfig SimConfig::from_json(const nlohmann::json& j) { return from_json(j, SimConfig{}); }

double cycle_demand(const DrivingCycle& cycle, const powertrain::Powertrain& plant, std::size_t i) {
    const double a = i + 1 < cycle.size() ? (cycle.v[i + 1] - cycle.v[i]) / cycle.dt : 0.0;
    return bus_demand(plant, cycle.v[i], a);
}

SimResult run_simulation(const DrivingCycle& cycle, const SimConfig& config, const powertrain::Powertrain& plant,
                         mpc::Controller& controller, const velocity::VelocityModel* velocity_model) {
    config.validate();
    cycle.validate();
    if (std::abs(cycle.dt - config.dt) > 1e-12)
        throw ValidationError("cycle dt " + std::to_string(cycle.dt) + " differs from sim dt " +
                              std::to_string(config.dt));
    using clock = std::chrono::steady_clock;
    const auto wall_start = clock::now();
    controller.reset();
    VelocityPreview preview(cycle, config.preview, velocity_model);

    const auto& batt = plant.battery;
    const double s_over_lhv = config.equivalence_factor / plant.fuel_cell.lhv_h2 * 1000.0;  // g/J
    const std::size_t horizon = std::max<std::size_t>(1, controller.horizon());

    SimResult result;
    auto& sum = result.summary;
    sum.controller = controller.name();
    sum.horizon = controller.horizon();
    const std::size_t steps = cycle.size() > 0 ? cycle.size() - 1 : 0;
    result.records.reserve(steps);

    double soc = config.initial_soc;
    DriveMode mode = DriveMode::ev;
    if (config.mode_rule == ModeRule::always_hev || (config.mode_rule == ModeRule::hysteresis && soc <= config.soc_hev_on))
        mode = DriveMode::hev;
    mpc::OperatingPoint z{batt.ocv(soc), batt.resistance(soc, 0.0), 0.0};
    double h2_fc = 0.0, h2_eq = 0.0, solve_total = 0.0;

    for (std::size_t k = 0; k < steps; ++k) {
        if (config.mode_rule == ModeRule::hysteresis) {
            if (mode == DriveMode::ev && soc <= config.soc_hev_on) mode = DriveMode::hev;
            else if (mode == DriveMode::hev && soc >= config.soc_hev_off) mode = DriveMode::ev;
        }
        const double p_load = cycle_demand(cycle, plant, k);
        double p_fc = 0.0, p_batt = p_load, solve_time = 0.0;
        bool relaxed = false;

        if (mode == DriveMode::hev && p_load > 0.0) {
            mpc::ControllerInput in;
            in.soc = soc;
            in.z = z;
            in.p_load_pre.resize(horizon);
            in.p_load_pre[0] = p_load;
            if (horizon > 1) {
                if (config.preview == Preview::constant) {
                    std::fill(in.p_load_pre.begin(), in.p_load_pre.end(), p_load);
                } else {
                    double va = preview.at(k, 1, horizon);
                    for (std::size_t j = 1; j < horizon; ++j) {
                        const double vb = preview.at(k, j + 1, horizon);
                        in.p_load_pre[j] = bus_demand(plant, va, (vb - va) / config.dt);
                        va = vb;
                    }
                }
            }
            mpc::ControlDecision d;
            const auto t0 = clock::now();
            try {
                d = controller.decide(in);
            } catch (const Error& e) {
                throw StepError(std::string("controller failed at step ") + std::to_string(k) + ": " + e.what(),
                                dump(cycle, k, soc, mode, p_load, p_fc, p_batt, z, controller));
            }
            solve_time = std::chrono::duration<double>(clock::now() - t0).count();
            p_fc = d.p_fc;
            p_batt = d.p_batt;
            relaxed = d.solution && d.solution->stats.relaxed;
            ++sum.controller_steps;
            solve_total += solve_time;
            sum.max_solve_time = std::max(sum.max_solve_time, solve_time);
        } else if (mode == DriveMode::ev && p_load > batt.p_discharge_max) {
            throw StepError("EV-mode demand exceeds the battery discharge limit at step " + std::to_string(k),
                            dump(cycle, k, soc, mode, p_load, p_fc, p_batt, z, controller));
        }

        const double tol = 1e-6 * std::max(1.0, std::abs(p_load));
        if (!(std::abs(p_fc + p_batt - p_load) <= tol) || p_fc < plant.fuel_cell.p_min - tol ||
            p_fc > plant.fuel_cell.p_max + tol || p_batt < batt.p_charge_min - tol ||
            p_batt > batt.p_discharge_max + tol)
            throw StepError("controller decision violates the plant limits at step " + std::to_string(k),
                            dump(cycle, k, soc, mode, p_load, p_fc, p_batt, z, controller));
        if (p_fc < plant.fuel_cell.p_min || p_fc > plant.fuel_cell.p_max) {
            p_fc = std::clamp(p_fc, plant.fuel_cell.p_min, plant.fuel_cell.p_max);
            p_batt = p_load - p_fc;
        }

        powertrain::BatteryState bs;
        double h2_rate = 0.0;
        try {
            bs = powertrain::battery_state(batt, soc, p_batt);
            h2_rate = powertrain::fc_hydrogen_rate(plant.fuel_cell, p_fc);
        } catch (const Error& e) {
            throw StepError(std::string("plant infeasible at step ") + std::to_string(k) + ": " + e.what(),
                            dump(cycle, k, soc, mode, p_load, p_fc, p_batt, z, controller));
        }
        const double r = batt.resistance(soc, p_batt);
        const auto next = powertrain::soc_step(batt, soc, bs.current, config.dt);

        h2_fc += h2_rate * config.dt;
        h2_eq += (h2_rate + p_batt * s_over_lhv) * config.dt;

        StepRecord rec;
        rec.t = cycle.time(k);
        rec.v = cycle.v[k];
        rec.p_load = p_load;
        rec.p_fc = p_fc;
        rec.p_batt = p_batt;
        rec.soc = soc;
        rec.u_batt = bs.terminal_voltage;
        rec.r_batt = r;
        rec.i_batt = bs.current;
        rec.h2_fc_cum = h2_fc;
        rec.h2_equiv_cum = h2_eq;
        rec.mode = mode;
        rec.solve_time = solve_time;
        rec.soc_clamped = next.clamped;
        result.records.push_back(rec);

        sum.max_balance_residual =
            std::max(sum.max_balance_residual, std::abs(p_fc + p_batt - p_load) / std::max({1.0, std::abs(p_fc), std::abs(p_batt), std::abs(p_load)}));
        if (mode == DriveMode::hev) ++sum.hev_steps;
        if (relaxed) ++sum.relaxed_steps;
        if (next.clamped) ++sum.clamped_steps;
        z = {bs.terminal_voltage, r, p_fc};
        soc = next.soc;
    }

    sum.steps = steps;
    sum.h2_fc_g = h2_fc;
    sum.h2_equiv_g = h2_eq;
    sum.final_soc = soc;
    sum.mean_solve_time = sum.controller_steps ? solve_total / static_cast<double>(sum.controller_steps) : 0.0;
    sum.sim_wall_time = std::chrono::duration<double>(clock::now() - wall_start).count();
    return result;
}

}  // namespace fcev::harness
