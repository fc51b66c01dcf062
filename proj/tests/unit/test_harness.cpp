#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "fcev/common/csv.hpp"
#include "fcev/harness/policies.hpp"
#include "fcev/harness/report.hpp"

using namespace fcev;
using namespace fcev::harness;

namespace {

std::shared_ptr<const powertrain::Powertrain> plant() {
    static auto p = std::make_shared<const powertrain::Powertrain>(powertrain::default_powertrain());
    return p;
}

DrivingCycle short_cycle(std::uint64_t seed, double duration = 300.0, CycleKind kind = CycleKind::mixed) {
    CycleGenConfig g;
    g.kind = kind;
    g.duration = duration;
    g.seed = seed;
    return generate_cycle(g, *plant());
}

std::shared_ptr<const learning::ExplicitTable> coulomb_table() {
    static auto t = [] {
        const double cap = plant()->battery.capacity_coulombs();
        auto exact = [cap](std::span<const double> x) { return -x[0] / x[2] * 0.05 / cap; };
        return std::make_shared<const learning::ExplicitTable>(
            learning::build_explicit_table(exact, learning::default_table_axes(), 0.05));
    }();
    return t;
}

SimResult run(const DrivingCycle& c, const SimConfig& sim, const std::string& strategy, std::size_t horizon = 1) {
    ControllerContext ctx{plant(), {}, coulomb_table(), 3};
    auto ctl = make_controller({strategy, horizon}, ctx, sim.dt);
    return run_simulation(c, sim, *plant(), *ctl);
}

}  // namespace

TEST_CASE("cycle ingestion") {
    const auto flat = parse_cycle("t_s,v_mps\n0,0\n1,0\n", 0.05, "flat");
    CHECK(flat.size() == 21);
    for (double v : flat.v) CHECK(v == 0.0);

    const auto ramp = parse_cycle("t_s,v_mps\n0,0\n10,10\n", 0.05, "ramp");
    CHECK(ramp.v[50] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(ramp.duration() == doctest::Approx(10.0));

    CHECK_THROWS_AS(parse_cycle("0,0\n1,0\n", 0.05, "x"), ParseError);
    CHECK_THROWS_AS(parse_cycle("t_s,v_mps\n", 0.05, "x"), ParseError);
    try {
        parse_cycle("t_s,v_mps\n0,0\n1,1\n1,2\n", 0.05, "x");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 4);
    }
    try {
        parse_cycle("t_s,v_mps\n0,0\n1,-1\n", 0.05, "x");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 3);
    }

    const auto path = std::filesystem::temp_directory_path() / "fcev_cycle.csv";
    write_cycle_csv(path, ramp);
    const auto back = load_cycle(path);
    CHECK(back.v == ramp.v);
    std::filesystem::remove(path);
}

TEST_CASE("generated cycles respect their limits") {
    for (auto kind : {CycleKind::urban, CycleKind::mixed}) {
        CycleGenConfig g;
        g.kind = kind;
        g.seed = 42;
        const auto c = generate_cycle(g, *plant());
        CHECK(c.size() == 36001);
        CHECK(c.v.front() == 0.0);
        CHECK(c.v.back() == 0.0);
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            CHECK(std::abs(c.v[i + 1] - c.v[i]) / c.dt <= 3.0 + 1e-9);
            const double p = plant()->electrical_demand(c.v[i], (c.v[i + 1] - c.v[i]) / c.dt).p_load;
            CHECK(std::abs(p) <= 40000.0 * (1 + 1e-6));
        }
        CHECK(generate_cycle(g, *plant()).v == c.v);
        g.seed = 43;
        CHECK(generate_cycle(g, *plant()).v != c.v);
    }
    CHECK(cycle_kind_from_string("urban") == CycleKind::urban);
    CHECK_THROWS_AS(cycle_kind_from_string("highway"), ValidationError);
}

TEST_CASE("standstill costs nothing") {
    const auto zero = parse_cycle("t_s,v_mps\n0,0\n60,0\n", 0.05, "zero");
    for (auto rule : {ModeRule::hysteresis, ModeRule::always_hev}) {
        SimConfig sim;
        sim.mode_rule = rule;
        const auto r = run(zero, sim, "tmpc", 10);
        CHECK(r.records.size() == zero.size() - 1);
        CHECK(r.summary.h2_equiv_g == 0.0);
        CHECK(r.summary.h2_fc_g == 0.0);
        CHECK(r.summary.final_soc == sim.initial_soc);
    }
}

TEST_CASE("EV-only runs burn no hydrogen") {
    SimConfig sim;
    sim.mode_rule = ModeRule::always_ev;
    const auto r = run(short_cycle(5), sim, "max_fc");
    for (const auto& rec : r.records) {
        CHECK(rec.h2_fc_cum == 0.0);
        CHECK(rec.p_fc == 0.0);
        CHECK(rec.mode == DriveMode::ev);
    }
}

TEST_CASE("energy and charge are conserved") {
    SimConfig sim;
    sim.mode_rule = ModeRule::always_hev;
    const auto c = short_cycle(6);
    for (const std::string s : {"tmpc", "lrmpc", "rule_based", "exploration"}) {
        const auto r = run(c, sim, s, 10);
        double e_fc = 0, e_batt = 0, e_load = 0, prev_h2 = 0;
        double soc = sim.initial_soc;
        const double cap = plant()->battery.capacity_coulombs();
        for (const auto& rec : r.records) {
            e_fc += rec.p_fc * sim.dt;
            e_batt += rec.p_batt * sim.dt;
            e_load += rec.p_load * sim.dt;
            CHECK(std::abs(rec.p_fc + rec.p_batt - rec.p_load) <= 1e-6 * std::max(1.0, std::abs(rec.p_load)));
            CHECK(rec.h2_fc_cum >= prev_h2);
            prev_h2 = rec.h2_fc_cum;
            CHECK(std::abs(rec.soc - soc) < 1e-9);
            soc -= rec.i_batt * sim.dt / cap;
            // Current and terminal voltage reproduce the battery power.
            CHECK(rec.i_batt * rec.u_batt == doctest::Approx(rec.p_batt).epsilon(1e-9));
        }
        CHECK(std::abs(e_fc + e_batt - e_load) <= 1e-6 * std::abs(e_load));
        CHECK(r.summary.max_balance_residual < 1e-6);
    }
}

TEST_CASE("mode hysteresis switches only at the thresholds") {
    SimConfig sim;
    sim.initial_soc = 0.58;
    sim.soc_hev_on = 0.575;
    sim.soc_hev_off = 0.58;
    const auto r = run(short_cycle(8, 600), sim, "max_fc");
    std::size_t transitions = 0;
    for (std::size_t k = 1; k < r.records.size(); ++k) {
        const auto& a = r.records[k - 1];
        const auto& b = r.records[k];
        if (a.mode == b.mode) continue;
        ++transitions;
        if (b.mode == DriveMode::hev) CHECK(b.soc <= sim.soc_hev_on);
        else CHECK(b.soc >= sim.soc_hev_off);
    }
    CHECK(transitions >= 2);
}

TEST_CASE("MPC strategies coincide until the first HEV step") {
    SimConfig sim;
    sim.initial_soc = 0.56;
    const auto c = short_cycle(9, 600);
    const auto a = run(c, sim, "tmpc", 10);
    const auto b = run(c, sim, "lrmpc", 10);
    std::size_t k = 0;
    for (; k < a.records.size() && a.records[k].mode == DriveMode::ev; ++k) {
        CHECK(a.records[k].soc == b.records[k].soc);
        CHECK(a.records[k].h2_equiv_cum == b.records[k].h2_equiv_cum);
    }
    CHECK(k > 0);
    CHECK(k < a.records.size());
}

TEST_CASE("simulation is deterministic") {
    SimConfig sim;
    sim.initial_soc = 0.56;
    const auto c = short_cycle(10);
    const auto a = run(c, sim, "tmpc", 5);
    const auto b = run(c, sim, "tmpc", 5);
    CHECK(step_log_text(a.records, true) == step_log_text(b.records, true));
}

TEST_CASE("plant infeasibility reports the state") {
    const auto steep = parse_cycle("t_s,v_mps\n0,10\n1,10\n2,25\n3,25\n", 0.05, "steep");
    SimConfig sim;
    sim.mode_rule = ModeRule::always_ev;
    try {
        run(steep, sim, "rule_based");
        FAIL("expected a step error");
    } catch (const StepError& e) {
        CHECK(e.state().at("step").get<std::size_t>() >= 20);
        CHECK(e.state().contains("soc"));
        CHECK(e.state().at("mode") == "ev");
    }
}

TEST_CASE("predictor preview requires a model") {
    SimConfig sim;
    sim.preview = Preview::predictor;
    sim.initial_soc = 0.5;
    CHECK_THROWS_AS(run(short_cycle(11, 30), sim, "tmpc", 5), ValidationError);
}

TEST_CASE("strategy comparison") {
    SimConfig sim;
    sim.mode_rule = ModeRule::always_hev;
    const auto c = short_cycle(12);
    ControllerContext ctx{plant(), {}, nullptr, 1};
    const auto same = compare_strategies(c, sim, ctx, {{"rule_based", 1}, {"rule_based", 1}});
    CHECK(same.results[0].summary.h2_equiv_g == same.results[1].summary.h2_equiv_g);
    CHECK(same.results[0].optimality_pct == 0.0);
    CHECK(same.results[1].optimality_pct == 0.0);

    const auto two = compare_strategies(c, sim, ctx, {{"max_fc", 1}, {"rule_based", 1}});
    const double a = two.results[0].summary.h2_equiv_g, b = two.results[1].summary.h2_equiv_g;
    CHECK(a != b);
    const double worst = std::max(a, b);
    for (const auto& r : two.results)
        CHECK(r.optimality_pct == doctest::Approx(100.0 * (worst - r.summary.h2_equiv_g) / worst));
    CHECK(std::min(two.results[0].optimality_pct, two.results[1].optimality_pct) == 0.0);

    CHECK_THROWS_AS(compare_strategies(c, sim, ctx, {{"lrmpc", 5}}), ValidationError);
    CHECK_THROWS_AS(compare_strategies(c, sim, ctx, {{"dp", 5}}), ValidationError);
}

TEST_CASE("step logs and reports") {
    CHECK(step_log_text({}) ==
          "t,v,p_load,p_fc,p_batt,soc,u_batt,r_batt,i_batt,h2_fc_cum,h2_equiv_cum,mode,solve_time,soc_clamped\n");
    CHECK(parse_step_log(step_log_text({})).empty());

    SimConfig sim;
    sim.initial_soc = 0.56;
    const auto r = run(short_cycle(13, 120), sim, "tmpc", 5);
    const auto back = parse_step_log(step_log_text(r.records));
    REQUIRE(back.size() == r.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].soc == doctest::Approx(r.records[i].soc).epsilon(1e-8));
        CHECK(back[i].p_fc == doctest::Approx(r.records[i].p_fc).epsilon(1e-8));
        CHECK(back[i].mode == r.records[i].mode);
        CHECK(back[i].soc_clamped == r.records[i].soc_clamped);
    }
    CHECK_THROWS_AS(parse_step_log("t,v\n1,2\n"), ParseError);

    ComparisonReport rep;
    rep.cycle = "c";
    rep.sim = sim;
    rep.results.push_back({{"tmpc", 5}, r.summary, 0.0});
    const auto j = rep.to_json(true);
    CHECK(j.at("version") == kReportVersion);
    CHECK(j.at("results")[0].at("mean_step_solve_time_s") == 0.0);
    const auto text = sweep_csv_text(rep);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("sim config json round trip") {
    SimConfig c;
    c.initial_soc = 0.65;
    c.mode_rule = ModeRule::always_hev;
    c.preview = Preview::constant;
    const auto back = SimConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK_THROWS_AS(SimConfig::from_json({{"soc_hev_on", 0.7}}), ValidationError);
    CHECK_THROWS_AS(SimConfig::from_json({{"preview", "psychic"}}), ValidationError);
}
