#include "fcev/mpc/problem.hpp"

#include <algorithm>
#include <cmath>

#include "fcev/common/error.hpp"

namespace fcev::mpc {

void HorizonProblem::validate() const {
    const std::size_t n_steps = horizon();
    if (n_steps == 0) throw InfeasibleProblemError("horizon must have at least one step");
    if (!(dt > 0.0)) throw InfeasibleProblemError("step time must be positive");
    if (k.size() != n_steps || u_min.size() != n_steps || u_max.size() != n_steps || m.size() != n_steps ||
        n.size() != n_steps) {
        throw InfeasibleProblemError("per-step vectors must match the horizon length");
    }
    for (std::size_t i = 0; i < n_steps; ++i) {
        if (!std::isfinite(p_load_seq[i])) throw InfeasibleProblemError("non-finite load at step " + std::to_string(i));
        if (!(u_min[i] <= u_max[i])) {
            throw InfeasibleProblemError("u_min > u_max at step " + std::to_string(i));
        }
    }
    if (!(p_batt_min <= p_batt_max)) throw InfeasibleProblemError("battery power bounds are unordered");
    if (!(p_fc_min <= p_fc_max)) throw InfeasibleProblemError("fuel-cell power bounds are unordered");
    if (!(dp_fc_min <= 0.0 && 0.0 <= dp_fc_max)) throw InfeasibleProblemError("fuel-cell rate bounds must bracket 0");
}

void MpcConfig::validate() const {
    if (horizon == 0) throw ValidationError("horizon must be at least 1");
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (q1 < 0.0 || q2 < 0.0) throw ValidationError("weights q1, q2 must be nonnegative");
    for (double w : k) {
        if (!(w >= 0.0)) throw ValidationError("step weights must be nonnegative");
    }
    if (!(k1 > 0.0)) throw ValidationError("k1 must be positive");
    if (!(dp_fc_max > 0.0)) throw ValidationError("dp_fc_max must be positive");
    if (!(equivalence_factor > 0.0)) throw ValidationError("equivalence factor must be positive");
    if (h2_model != "map" && h2_model != "linear") throw ValidationError("h2_model must be 'map' or 'linear'");
    if (linearization != "iterate" && linearization != "frozen") {
        throw ValidationError("linearization must be 'iterate' or 'frozen'");
    }
    if (!(solver.tolerance > 0.0) || solver.max_iterations == 0 || !(solver.fd_step > 0.0) ||
        !(solver.stall_tolerance >= 0.0)) {
        throw ValidationError("solver settings must be positive");
    }
}

nlohmann::json MpcConfig::to_json() const {
    return {{"horizon", horizon},
            {"dt", dt},
            {"q1", q1},
            {"q2", q2},
            {"x_ref", x_ref},
            {"y_ref", y_ref},
            {"k", k},
            {"squared_state", squared_state},
            {"k1", k1},
            {"warm_start_fc_power", warm_start_fc_power},
            {"dp_fc_max", dp_fc_max},
            {"equivalence_factor", equivalence_factor},
            {"h2_model", h2_model},
            {"linearization", linearization},
            {"solver",
             {{"tolerance", solver.tolerance},
              {"max_iterations", solver.max_iterations},
              {"fd_step", solver.fd_step},
              {"stall_tolerance", solver.stall_tolerance}}}};
}

MpcConfig MpcConfig::from_json(const nlohmann::json& j, MpcConfig c) {
    try {
        c.horizon = j.value("horizon", c.horizon);
        c.dt = j.value("dt", c.dt);
        c.q1 = j.value("q1", c.q1);
        c.q2 = j.value("q2", c.q2);
        c.x_ref = j.value("x_ref", c.x_ref);
        c.y_ref = j.value("y_ref", c.y_ref);
        c.k = j.value("k", c.k);
        c.squared_state = j.value("squared_state", c.squared_state);
        c.k1 = j.value("k1", c.k1);
        c.warm_start_fc_power = j.value("warm_start_fc_power", c.warm_start_fc_power);
        c.dp_fc_max = j.value("dp_fc_max", c.dp_fc_max);
        c.equivalence_factor = j.value("equivalence_factor", c.equivalence_factor);
        c.h2_model = j.value("h2_model", c.h2_model);
        c.linearization = j.value("linearization", c.linearization);
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            c.solver.tolerance = s.value("tolerance", c.solver.tolerance);
            c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
            c.solver.stall_tolerance = s.value("stall_tolerance", c.solver.stall_tolerance);
            c.solver.fd_step = s.value("fd_step", c.solver.fd_step);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("controller config: ") + e.what());
    }
    c.validate();
    return c;
}

MpcConfig MpcConfig::from_json(const nlohmann::json& j) { return from_json(j, MpcConfig{}); }

HorizonProblem make_problem(const MpcConfig& cfg, const powertrain::Powertrain& plant, double soc,
                            const OperatingPoint& z, std::vector<double> p_load_seq, double p_fc_prev) {
    const auto& fc = plant.fuel_cell;
    const auto& batt = plant.battery;
    HorizonProblem p;
    p.soc_0 = soc;
    p.z = z;
    p.dt = cfg.dt;
    p.q1 = cfg.q1;
    p.q2 = cfg.q2;
    p.x_ref = cfg.x_ref;
    p.y_ref = cfg.y_ref;
    p.squared_state = cfg.squared_state;
    p.p_batt_min = batt.p_charge_min;
    p.p_batt_max = batt.p_discharge_max;
    p.p_fc_min = fc.p_min;
    p.p_fc_max = fc.p_max;
    p.dp_fc_min = -cfg.dp_fc_max;
    p.dp_fc_max = cfg.dp_fc_max;
    p.p_fc_prev = p_fc_prev;

    const double load_cap = fc.p_max + batt.p_discharge_max;
    for (double& l : p_load_seq) l = l > 0.0 ? std::min(l, load_cap) : std::max(l, batt.p_charge_min);
    p.p_load_seq = std::move(p_load_seq);

    const std::size_t n = p.horizon();
    p.k.assign(n, 1.0);
    for (std::size_t i = 0; i < n && i < cfg.k.size(); ++i) p.k[i] = cfg.k[i];
    p.u_min.resize(n);
    p.u_max.resize(n);
    p.m.resize(n);
    p.n.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = p.p_load_seq[i];
        if (l > 0.0) {
            const double u0 = 1.0 - cfg.warm_start_fc_power / l;
            p.u_min[i] = u0 - cfg.k1;
            p.u_max[i] = u0 + cfg.k1;
        } else {
            p.u_min[i] = p.u_max[i] = 1.0;
        }
        p.m[i] = l;
        p.n[i] = fc.p_max - l;
    }
    return p;
}

OutputModel::OutputModel(const powertrain::FuelCellModel& fc, double equivalence_factor, bool use_map)
    : fc_(&fc), s_over_q_(equivalence_factor * 1000.0 / fc.lhv_h2), use_map_(use_map) {}

double OutputModel::fc_rate(double p_fc) const {
    if (p_fc <= 0.0) return 0.0;
    if (!use_map_) return fc_->c_h2 * p_fc;
    const auto& c = fc_->h2_rate_curve;
    if (p_fc <= c.x_max()) return c(std::max(p_fc, c.x_min()));
    const auto& xs = c.xs();
    const auto& ys = c.ys();
    const std::size_t m = xs.size();
    const double slope = (ys[m - 1] - ys[m - 2]) / (xs[m - 1] - xs[m - 2]);
    return ys[m - 1] + slope * (p_fc - xs[m - 1]);
}

double OutputModel::operator()(double u, double p_load) const {
    return fc_rate((1.0 - u) * p_load) + s_over_q_ * u * p_load;
}

}  // namespace fcev::mpc
