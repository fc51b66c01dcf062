#include <doctest.h>

#include <cmath>
#include <memory>

#include "fcev/common/error.hpp"
#include "fcev/common/rng.hpp"
#include "fcev/learning/observer_data.hpp"
#include "fcev/mpc/controller.hpp"
#include "support/oracles.hpp"

using namespace fcev;
using namespace fcev::mpc;

namespace {

const powertrain::Powertrain& plant() {
    static const auto p = powertrain::default_powertrain();
    return p;
}

// Exact SOC rate as a function of the split ratio and load.
double exact_rate(const LinearizationInput& in, double u, double v) {
    const double p = u * v;
    return -testing::quadratic_current(in.u_ocv, in.r_batt, p) / in.capacity_c;
}

double exact_y(const LinearizationInput& in, double u, double v) {
    return in.c_h2 * (1.0 - u) * v + in.s_over_q * u * v;
}

LinearizationInput random_point(Rng& rng) {
    LinearizationInput in;
    in.u_ocv = rng.uniform(320, 400);
    in.r_batt = rng.uniform(0.44, 0.54);
    in.capacity_c = 3600.0 * 40.0;
    in.p_load = rng.uniform(5000, 60000);
    in.p_batt = rng.uniform(-0.8, 0.9) * in.p_load;
    in.c_h2 = rng.uniform(1.2e-5, 2.0e-5);
    in.s_over_q = 2.0 / 1.2e5;
    return in;
}

HorizonProblem flat_problem(std::size_t n, double load) {
    MpcConfig cfg;
    cfg.horizon = n;
    const double soc = 0.58;
    OperatingPoint z{plant().battery.ocv(soc), plant().battery.resistance(soc, 1.0), 25000.0};
    return make_problem(cfg, plant(), soc, z, std::vector<double>(n, load), 25000.0);
}

struct ZeroObserver final : StateObserver {
    double rate(std::size_t, double, double, double) const override { return 0.0; }
    bool state_dependent() const override { return false; }
};

learning::ExplicitTable exact_table(const powertrain::Powertrain& pt) {
    const double dt = 0.05, cap = pt.battery.capacity_coulombs();
    // Terminal voltage fixes the current: I = P / U_batt.
    auto exact = [&](std::span<const double> x) { return -x[0] / x[2] * dt / cap; };
    return learning::build_explicit_table(exact, learning::default_table_axes(), dt);
}

}  // namespace

TEST_CASE("linearization matches the closed form and finite differences") {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        const auto in = random_point(rng);
        const auto l = linearize(in);
        CHECK(l.A == 0.0);
        CHECK(l.D == 0.0);
        const double u0 = in.p_batt / in.p_load, v0 = in.p_load;
        const double hu = 1e-5, hv = 1e-2;
        const double b_fd = (exact_rate(in, u0 + hu, v0) - exact_rate(in, u0 - hu, v0)) / (2 * hu);
        const double c_fd = (exact_rate(in, u0, v0 + hv) - exact_rate(in, u0, v0 - hv)) / (2 * hv);
        const double e_fd = (exact_y(in, u0 + hu, v0) - exact_y(in, u0 - hu, v0)) / (2 * hu);
        const double f_fd = (exact_y(in, u0, v0 + hv) - exact_y(in, u0, v0 - hv)) / (2 * hv);
        CHECK(l.B == doctest::Approx(b_fd).epsilon(1e-4));
        CHECK(l.C == doctest::Approx(c_fd).epsilon(1e-4));
        CHECK(l.E == doctest::Approx(e_fd).epsilon(1e-4));
        CHECK(l.F == doctest::Approx(f_fd).epsilon(1e-4));
        // The affine term closes the output exactly at the point.
        CHECK(l.E * u0 + l.F * v0 + l.G == doctest::Approx(exact_y(in, u0, v0)).epsilon(1e-12));
    }
}

TEST_CASE("linearization at zero battery power") {
    LinearizationInput in;
    in.u_ocv = 350;
    in.r_batt = 0.5;
    in.capacity_c = 144000;
    in.p_load = 20000;
    in.p_batt = 0;
    const auto l = linearize(in);
    CHECK(l.B == doctest::Approx(-20000.0 / (144000.0 * 350.0)).epsilon(1e-14));
    CHECK(l.C == 0.0);
    in.p_batt = 350.0 * 350.0 / (4 * 0.5);
    CHECK_THROWS_AS(linearize(in), InfeasibleProblemError);
}

TEST_CASE("linearization remainder is second order") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        auto in = random_point(rng);
        const auto l = linearize(in);
        const double u0 = in.p_batt / in.p_load, v = in.p_load;
        auto remainder = [&](double du) { return std::abs(exact_rate(in, u0 + du, v) - exact_rate(in, u0, v) - l.B * du); };
        const double r1 = remainder(0.01), r2 = remainder(0.005);
        CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.5));
    }
}

TEST_CASE("linearized rollout") {
    auto p = flat_problem(6, 20000);
    LinearizedModel zero;
    zero.steps.assign(6, Linearization{});
    std::vector<double> u(6, 0.0);
    for (double x : tmpc_rollout(zero, p, u).soc) CHECK(x == p.soc_0);

    auto p1 = flat_problem(1, 20000);
    LinearizedModel one;
    one.steps.push_back({0, -2e-7, -1e-11, 0, 1e-2, 2e-5, 0.1});
    const double u1 = 0.3;
    const auto r1 = tmpc_rollout(one, p1, std::vector{u1});
    CHECK(r1.soc[0] == doctest::Approx(p1.soc_0 + (-2e-7 * u1 - 1e-11 * 20000) * p1.dt).epsilon(1e-15));
    CHECK(r1.y[0] == doctest::Approx(1e-2 * u1 + 2e-5 * 20000 + 0.1));

    Rng rng(9);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.index(30);
        auto pn = flat_problem(n, 1.0);
        LinearizedModel m;
        std::vector<double> un(n);
        for (std::size_t i = 0; i < n; ++i) {
            pn.p_load_seq[i] = rng.uniform(1000, 50000);
            un[i] = rng.uniform(-1, 1);
            m.steps.push_back({0, rng.uniform(-1e-6, 0), rng.uniform(-1e-10, 0), 0, rng.uniform(0, 1),
                               rng.uniform(0, 1e-4), rng.uniform(-1, 1)});
        }
        const auto a = tmpc_rollout(m, pn, un);
        const auto b = tmpc_rollout_stacked(m, pn, un);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(a.soc[i] - b.soc[i]) < 1e-12);
            CHECK(a.y[i] == b.y[i]);
        }
    }
}

TEST_CASE("polynomial rollout") {
    auto p = flat_problem(4, 20000);
    learning::SocPolynomial zero{std::vector<double>(8, 0.0), -40000, 45000, 0.0};
    std::vector<learning::SocPolynomial> polys(4, zero);
    std::vector<double> u(4, 0.5);
    for (double x : lrmpc_rollout(polys, p, u)) CHECK(x == p.soc_0);

    // Affine in T for fixed controls.
    learning::SocPolynomial lin{{-1e-6, -1e-9, 0, 0, 0, 0, 0, 0}, -40000, 45000, 0.0};
    std::vector<learning::SocPolynomial> lp(4, lin);
    auto p2 = p;
    p2.dt = 2 * p.dt;
    const auto x1 = lrmpc_rollout(lp, p, u), x2 = lrmpc_rollout(lp, p2, u);
    for (std::size_t i = 0; i < 4; ++i) CHECK(x2[i] - p.soc_0 == doctest::Approx(2 * (x1[i] - p.soc_0)).epsilon(1e-12));

    // Coulomb-counting curve against the plant.
    const auto& batt = plant().battery;
    const double soc = 0.58;
    std::vector<double> xs, ys;
    for (int i = 0; i <= 16; ++i) {
        const double pb = batt.p_charge_min + (batt.p_discharge_max - batt.p_charge_min) * i / 16.0;
        xs.push_back(pb);
        ys.push_back(-powertrain::battery_current(batt, soc, pb) / batt.capacity_coulombs());
    }
    const auto poly = learning::fit_soc_polynomial(xs, ys);
    auto p1 = flat_problem(1, 30000);
    p1.soc_0 = soc;
    const double u1 = 0.4;
    const auto x = lrmpc_rollout(std::vector{poly}, p1, std::vector{u1});
    const auto plant_next = powertrain::soc_step(batt, soc, powertrain::battery_current(batt, soc, u1 * 30000), p1.dt);
    CHECK(std::abs(x[0] - plant_next.soc) <= poly.fit_rmse * p1.dt * 4 + 1e-15);

    std::vector<double> bad(1, 2.0);
    try {
        lrmpc_rollout(std::vector{poly}, p1, bad);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("objective") {
    auto p = flat_problem(3, 20000);
    p.y_ref = 0.3;
    std::vector<double> x(3, p.x_ref), y(3, p.y_ref);
    CHECK(objective(p, x, y) == 0.0);
    p.q1 = 0;
    p.q2 = 1;
    std::vector<double> xc(3, p.x_ref + 0.01);
    CHECK(objective(p, xc, y) == doctest::Approx(3 * 0.01));

    auto p2 = flat_problem(2, 20000);
    p2.k = {1.0, 2.0};
    p2.q1 = 3.0;
    p2.q2 = 5.0;
    p2.x_ref = 0.6;
    p2.y_ref = 0.1;
    const std::vector<double> xs{0.61, 0.59}, ys{0.4, 0.2};
    const double hand = 1.0 * (3.0 * 0.3 * 0.3 + 5.0 * 0.01) + 2.0 * (3.0 * 0.1 * 0.1 + 5.0 * -0.01);
    CHECK(objective(p2, xs, ys) == doctest::Approx(hand).epsilon(1e-14));
    p2.squared_state = true;
    const double hand_sq = 1.0 * (3.0 * 0.09 + 5.0 * 1e-4) + 2.0 * (3.0 * 0.01 + 5.0 * 1e-4);
    CHECK(objective(p2, xs, ys) == doctest::Approx(hand_sq).epsilon(1e-14));
}

TEST_CASE("solver recovers the minimizer of a convex quadratic") {
    auto p = flat_problem(1, 20000);
    p.q2 = 0.0;
    OutputModel out(plant().fuel_cell, 2.0, false);
    ZeroObserver obs;
    // y(u) = a + b u is linear, so (y - y_ref)^2 is minimal at u* = (y_ref - a) / b.
    const double a = out(0.0, 20000), b = out(1.0, 20000) - a;
    const double u_star = -0.22;
    p.y_ref = a + b * u_star;
    const auto sol = solve(p, obs, out, SolverSettings{});
    CHECK(sol.stats.converged);
    CHECK(sol.u_seq[0] == doctest::Approx(u_star).epsilon(1e-6));
}

TEST_CASE("degenerate band pins the controls") {
    auto p = flat_problem(4, 30000);
    for (std::size_t i = 0; i < 4; ++i) p.u_min[i] = p.u_max[i] = 0.2;
    p.p_fc_prev = 0.8 * 30000;
    OutputModel out(plant().fuel_cell, 2.0, true);
    LinearizedObserver obs(plant().battery, out, LinearizedObserver::Mode::iterate, p, {});
    const auto sol = solve(p, obs, out, SolverSettings{});
    for (double u : sol.u_seq) CHECK(u == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("infeasible bounds are reported") {
    auto p = flat_problem(2, 30000);
    p.u_min[1] = 0.5;
    p.u_max[1] = 0.4;
    OutputModel out(plant().fuel_cell, 2.0, true);
    ZeroObserver obs;
    CHECK_THROWS_AS(solve(p, obs, out, SolverSettings{}), InfeasibleProblemError);
    auto q = flat_problem(2, 30000);
    q.p_fc_min = 70000;
    CHECK_THROWS_AS(solve(q, obs, out, SolverSettings{}), InfeasibleProblemError);
}

TEST_CASE("solutions respect every constraint and improve on the warm start") {
    Rng rng(77);
    MpcConfig cfg;
    OutputModel out(plant().fuel_cell, 2.0, true);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 1 + rng.index(25);
        auto p = testing::random_problem(rng, n, plant(), cfg);
        if (t % 5 == 0) p.p_fc_prev = rng.uniform(0, 61560);  // forces the band to relax
        LinearizedObserver obs(plant().battery, out, LinearizedObserver::Mode::iterate, p, {});
        const auto sol = solve(p, obs, out, SolverSettings{});
        const auto fs = feasible_set(p);
        double prev = p.p_fc_prev;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = p.p_load_seq[i];
            const double pb = sol.u_seq[i] * l, pf = l - pb;
            CHECK(pb >= p.p_batt_min - 1e-6);
            CHECK(pb <= p.p_batt_max + 1e-6);
            CHECK(pf >= p.p_fc_min - 1e-6);
            CHECK(pf <= p.p_fc_max + 1e-6);
            CHECK(p.m[i] * sol.u_seq[i] + p.n[i] >= -1e-6);
            if (i > 0 ? fs.linked[i] : !fs.relaxed) {
                CHECK(pf - prev >= p.dp_fc_min - 1e-6);
                CHECK(pf - prev <= p.dp_fc_max + 1e-6);
            }
            if (!fs.relaxed) {
                CHECK(sol.u_seq[i] >= p.u_min[i] - 1e-9);
                CHECK(sol.u_seq[i] <= p.u_max[i] + 1e-9);
            }
            prev = pf;
        }
        std::vector<double> centre(n);
        for (std::size_t i = 0; i < n; ++i) centre[i] = 0.5 * (p.u_min[i] + p.u_max[i]);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = (1 - centre[i]) * p.p_load_seq[i] / 1000;
        fs.project(w);
        for (std::size_t i = 0; i < n; ++i) centre[i] = 1 - 1000 * w[i] / p.p_load_seq[i];
        CHECK(sol.objective <= evaluate(p, obs, out, centre).objective + 1e-12);
        CHECK(sol.objective == doctest::Approx(testing::direct_objective(p, obs, out, sol.u_seq)).epsilon(1e-12));
    }
}

TEST_CASE("solver matches the exhaustive grid on short horizons") {
    Rng rng(5);
    MpcConfig cfg;
    OutputModel out(plant().fuel_cell, 2.0, true);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + rng.index(2);
        const auto p = testing::random_problem(rng, n, plant(), cfg);
        LinearizedObserver obs(plant().battery, out, LinearizedObserver::Mode::iterate, p, {});
        const auto sol = solve(p, obs, out, SolverSettings{});
        CHECK(sol.objective <= testing::grid_minimum(p, obs, out) + 1e-4);
    }
}

TEST_CASE("zero-load steps are pinned to the battery") {
    auto p = flat_problem(4, 30000);
    p.p_load_seq[2] = -5000;
    p.u_min[2] = p.u_max[2] = 1.0;
    OutputModel out(plant().fuel_cell, 2.0, true);
    LinearizedObserver obs(plant().battery, out, LinearizedObserver::Mode::iterate, p, {});
    const auto sol = solve(p, obs, out, SolverSettings{});
    CHECK(sol.u_seq[2] == 1.0);
    CHECK_FALSE(feasible_set(p).linked[3]);
}

TEST_CASE("warm start band follows the 25 kW rule") {
    MpcConfig cfg;
    cfg.horizon = 3;
    auto p = make_problem(cfg, plant(), 0.58, {}, {25000, 50000, -100}, 25000);
    CHECK(0.5 * (p.u_min[0] + p.u_max[0]) == doctest::Approx(0.0));
    CHECK(p.u_min[0] == doctest::Approx(-0.3));
    CHECK(p.u_max[1] == doctest::Approx(0.5 + 0.3));
    CHECK(p.m[1] == 50000);
    CHECK(p.n[1] == doctest::Approx(61560 - 50000));
    CHECK(p.u_min[2] == 1.0);
}

TEST_CASE("controllers agree on an exact table at short horizon") {
    auto pt = std::make_shared<const powertrain::Powertrain>(plant());
    auto table = std::make_shared<const learning::ExplicitTable>(exact_table(*pt));
    MpcConfig cfg;
    cfg.horizon = 5;
    cfg.q2 = 1.0;
    TmpcController tmpc(pt, cfg);
    LrmpcController lrmpc(pt, cfg, table);
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const double soc = rng.uniform(0.5, 0.62);
        const double load = rng.uniform(10000, 40000);
        const double pfc = 25000 + rng.uniform(-1500, 1500);
        const double pb = load - pfc;
        const auto st = powertrain::battery_state(pt->battery, soc, pb);
        ControllerInput in{soc, {st.terminal_voltage, pt->battery.resistance(soc, pb), pfc},
                           std::vector<double>(5, load)};
        tmpc.reset();
        lrmpc.reset();
        const auto a = tmpc.decide(in);
        const auto b = lrmpc.decide(in);
        CHECK(std::abs(a.u - b.u) <= 0.02);
        CHECK(a.p_fc + a.p_batt == doctest::Approx(load));
    }
}

TEST_CASE("controllers bypass non-positive demand") {
    auto pt = std::make_shared<const powertrain::Powertrain>(plant());
    TmpcController tmpc(pt, MpcConfig{});
    ControllerInput in;
    in.p_load_pre = {-3000.0};
    const auto d = tmpc.decide(in);
    CHECK(d.u == 1.0);
    CHECK(d.p_fc == 0.0);
    CHECK(d.p_batt == -3000.0);
}
