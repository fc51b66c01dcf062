#include "fcev/mpc/controller.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "fcev/common/error.hpp"

namespace fcev::mpc {

namespace {

/// Previous fuel-cell plan shifted one step, expressed as split ratios for the new loads.
std::vector<double> shifted_guess(const std::vector<double>& previous_fc, const std::vector<double>& loads) {
    if (previous_fc.empty()) return {};
    std::vector<double> u(loads.size(), 1.0);
    for (std::size_t i = 0; i < loads.size(); ++i) {
        const double pfc = previous_fc[std::min(i + 1, previous_fc.size() - 1)];
        if (loads[i] > 0.0) u[i] = 1.0 - pfc / loads[i];
    }
    return u;
}

std::vector<double> fc_plan(const HorizonProblem& p, const std::vector<double>& u) {
    std::vector<double> fc(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) fc[i] = p.active(i) ? (1.0 - u[i]) * p.p_load_seq[i] : 0.0;
    return fc;
}

ControlDecision decision_from(const HorizonProblem& p, ControlSolution sol, double wall) {
    ControlDecision d;
    d.u = sol.u_seq.front();
    const double l = p.p_load_seq.front();
    d.p_batt = d.u * l;
    d.p_fc = l - d.p_batt;
    d.solve_time = wall;
    d.solution = std::make_shared<const ControlSolution>(std::move(sol));
    return d;
}

ControlDecision bypass(double p_load) {
    ControlDecision d;
    d.u = 1.0;
    d.p_batt = p_load;
    d.p_fc = 0.0;
    return d;
}

}  // namespace

TmpcController::TmpcController(std::shared_ptr<const powertrain::Powertrain> plant, MpcConfig cfg)
    : plant_(std::move(plant)), cfg_(std::move(cfg)),
      output_(plant_->fuel_cell, cfg_.equivalence_factor, cfg_.h2_model == "map") {
    cfg_.validate();
}

ControlDecision TmpcController::decide(const ControllerInput& in) {
    if (in.p_load_pre.empty() || in.p_load_pre.front() <= 0.0) return bypass(in.p_load_pre.empty() ? 0.0 : in.p_load_pre.front());
    const auto t0 = std::chrono::steady_clock::now();
    auto problem = make_problem(cfg_, *plant_, in.soc, in.z, in.p_load_pre, in.z.p_fc);
    const auto guess = shifted_guess(previous_fc_, problem.p_load_seq);
    const auto mode = cfg_.linearization == "frozen" ? LinearizedObserver::Mode::frozen
                                                     : LinearizedObserver::Mode::iterate;
    LinearizedObserver observer(plant_->battery, output_, mode, problem, guess);
    auto sol = solve(problem, observer, output_, cfg_.solver, guess);
    previous_fc_ = fc_plan(problem, sol.u_seq);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return decision_from(problem, std::move(sol), wall);
}

std::vector<learning::SocPolynomial> build_step_polynomials(const learning::ExplicitTable& table,
                                                            const OperatingPoint& z,
                                                            const std::vector<double>& p_load_seq) {
    const auto& ax = table.axes;
    const auto slice = learning::filter_stage1(table, std::clamp(z.u_batt, ax[2].min, ax[2].max),
                                               std::clamp(z.r_batt, ax[3].min, ax[3].max),
                                               std::clamp(z.p_fc, ax[4].min, ax[4].max));
    std::map<std::size_t, learning::SocPolynomial> fitted;  // one fit per distinct table row
    std::vector<learning::SocPolynomial> polys;
    polys.reserve(p_load_seq.size());
    for (double l : p_load_seq) {
        const auto curve = learning::filter_stage2(slice, std::clamp(l, ax[1].min, ax[1].max));
        auto it = fitted.find(curve.p_load_index);
        if (it == fitted.end()) {
            std::vector<double> rate(curve.delta_soc.size());
            for (std::size_t j = 0; j < rate.size(); ++j) rate[j] = curve.delta_soc[j] / table.sample_dt;
            it = fitted.emplace(curve.p_load_index, learning::fit_soc_polynomial(curve.p_batt, rate)).first;
        }
        polys.push_back(it->second);
    }
    return polys;
}

ControlSolution lrmpc_step(const powertrain::Powertrain& plant, const learning::ExplicitTable& table,
                          const MpcConfig& cfg, const ControllerInput& in, std::span<const double> initial_u) {
    if (in.p_load_pre.empty() || in.p_load_pre.front() <= 0.0) {
        throw InfeasibleProblemError("LRMPC step requires positive current demand");
    }
    auto problem = make_problem(cfg, plant, in.soc, in.z, in.p_load_pre, in.z.p_fc);
    // Battery power must stay inside the table's p_batt axis.
    problem.p_batt_min = std::max(problem.p_batt_min, table.axes[0].min);
    problem.p_batt_max = std::min(problem.p_batt_max, table.axes[0].max);
    for (double& l : problem.p_load_seq) {
        if (l <= 0.0) l = std::max(l, problem.p_batt_min);
    }
    PolynomialObserver observer(build_step_polynomials(table, in.z, problem.p_load_seq));
    OutputModel output(plant.fuel_cell, cfg.equivalence_factor, cfg.h2_model == "map");
    return solve(problem, observer, output, cfg.solver, initial_u);
}

LrmpcController::LrmpcController(std::shared_ptr<const powertrain::Powertrain> plant, MpcConfig cfg,
                                 std::shared_ptr<const learning::ExplicitTable> table)
    : plant_(std::move(plant)), cfg_(std::move(cfg)), table_(std::move(table)) {
    cfg_.validate();
    if (!table_) throw ValidationError("LRMPC needs an explicit table");
    table_->validate();
}

ControlDecision LrmpcController::decide(const ControllerInput& in) {
    if (in.p_load_pre.empty() || in.p_load_pre.front() <= 0.0) return bypass(in.p_load_pre.empty() ? 0.0 : in.p_load_pre.front());
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> loads = in.p_load_pre;
    const auto guess = shifted_guess(previous_fc_, loads);
    auto sol = lrmpc_step(*plant_, *table_, cfg_, in, guess);
    auto problem = make_problem(cfg_, *plant_, in.soc, in.z, loads, in.z.p_fc);
    previous_fc_ = fc_plan(problem, sol.u_seq);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return decision_from(problem, std::move(sol), wall);
}

}  // namespace fcev::mpc
