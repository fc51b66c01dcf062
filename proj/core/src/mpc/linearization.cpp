#include "fcev/mpc/linearization.hpp"

#include <cmath>
#include <string>

#include "fcev/common/error.hpp"
#include "fcev/powertrain/battery.hpp"

namespace fcev::mpc {

Linearization linearize(const LinearizationInput& in) {
    const double disc = in.u_ocv * in.u_ocv - 4.0 * in.r_batt * in.p_batt;
    if (!(disc > 0.0)) {
        throw InfeasibleProblemError("linearization point infeasible: U_OCV^2 - 4 R P_batt = " + std::to_string(disc));
    }
    if (in.p_load == 0.0) throw InfeasibleProblemError("linearization needs a nonzero load");
    const double root = std::sqrt(disc);
    const double slope = -in.c_h2 + in.s_over_q;
    Linearization l;
    l.B = -in.p_load / (in.capacity_c * root);
    l.C = -in.p_batt / (in.p_load * in.capacity_c * root);
    l.E = slope * in.p_load;
    l.F = in.c_h2 + slope * in.p_batt / in.p_load;
    l.G = (in.c_h2 - in.s_over_q) * in.p_batt;
    return l;
}

double soc_rate(double u_ocv, double r_batt, double capacity_c, double p_batt) {
    return -powertrain::battery_current(u_ocv, r_batt, p_batt) / capacity_c;
}

namespace {

std::vector<double> stacked(const std::vector<Linearization>& steps, double dt, double Linearization::*field) {
    const std::size_t n = steps.size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) m[i * n + j] = steps[j].*field * dt;
    }
    return m;
}

}  // namespace

std::vector<double> LinearizedModel::stacked_b(double dt) const { return stacked(steps, dt, &Linearization::B); }
std::vector<double> LinearizedModel::stacked_c(double dt) const { return stacked(steps, dt, &Linearization::C); }

Rollout tmpc_rollout(const LinearizedModel& model, const HorizonProblem& problem, std::span<const double> u) {
    const std::size_t n = problem.horizon();
    if (u.size() != n || model.steps.size() != n) throw ShapeError("rollout length must match the horizon");
    Rollout r;
    r.soc.resize(n);
    r.y.resize(n);
    double x = problem.soc_0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& l = model.steps[i];
        const double v = problem.p_load_seq[i];
        x += (l.A * x + l.B * u[i] + l.C * v) * problem.dt;
        r.soc[i] = x;
        r.y[i] = l.E * u[i] + l.F * v + l.G;
    }
    return r;
}

Rollout tmpc_rollout_stacked(const LinearizedModel& model, const HorizonProblem& problem,
                             std::span<const double> u) {
    const std::size_t n = problem.horizon();
    if (u.size() != n || model.steps.size() != n) throw ShapeError("rollout length must match the horizon");
    const auto bt = model.stacked_b(problem.dt);
    const auto ct = model.stacked_c(problem.dt);
    Rollout r;
    r.soc.assign(n, problem.soc_0);
    r.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) r.soc[i] += bt[i * n + j] * u[j] + ct[i * n + j] * problem.p_load_seq[j];
        const auto& l = model.steps[i];
        r.y[i] = l.E * u[i] + l.F * problem.p_load_seq[i] + l.G;
    }
    return r;
}

}  // namespace fcev::mpc
