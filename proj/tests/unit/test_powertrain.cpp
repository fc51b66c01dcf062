#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fcev/common/error.hpp"
#include "fcev/common/csv.hpp"
#include "fcev/common/rng.hpp"
#include "fcev/powertrain/plant.hpp"

using namespace fcev;
using namespace fcev::powertrain;

namespace {

// Independent closed form of the pack current used as the oracle below.
double oracle_current(double u, double r, double p) { return (u - std::sqrt(u * u - 4.0 * r * p)) / (2.0 * r); }

}  // namespace

TEST_CASE("tractive force matches hand arithmetic") {
    VehicleParams p;
    const double rolling = 1860.0 * 9.81 * 0.015;
    CHECK(tractive_force(0, 0, p) == doctest::Approx(rolling).epsilon(1e-12));
    CHECK(rolling == doctest::Approx(273.70).epsilon(1e-4));
    CHECK(tractive_force(0, 1, p) == doctest::Approx(rolling + 1.05 * 1860.0).epsilon(1e-12));
    CHECK(tractive_force(0, 1, p) == doctest::Approx(2226.70).epsilon(1e-4));
    CHECK(tractive_force(10, 0, p) == doctest::Approx(309.10).epsilon(1e-4));
}

TEST_CASE("tractive force is strictly increasing in speed for nonnegative acceleration") {
    VehicleParams p;
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        const double v = rng.uniform(0, 40);
        const double a = rng.uniform(0, 3);
        CHECK(tractive_force(v + 0.01, a, p) > tractive_force(v, a, p));
    }
}

TEST_CASE("demand power traction and regeneration branches") {
    VehicleParams p;
    CHECK(demand_power(0, 1.0, p, 0.9) == 0.0);
    const double f10 = 1860.0 * 9.81 * 0.015 + 0.5 * 1.18 * 0.3 * 2.0 * 100.0;
    CHECK(demand_power(10, 0, p, 0.9) == doctest::Approx(f10 * 10 / (0.95 * 0.9)).epsilon(1e-12));
    CHECK(demand_power(10, 0, p, 0.9) == doctest::Approx(3615.2).epsilon(1e-4));
    const double regen = (f10 - 1.05 * 1860.0 * 2.0) * 10.0 * 0.95 * 0.9;
    CHECK(demand_power(10, -2, p, 0.9) == doctest::Approx(regen).epsilon(1e-12));
    CHECK(regen < -30000.0);
}

TEST_CASE("axle split") {
    VehicleParams p;
    auto a = split_axle_power(10000, p);
    CHECK(a.front == doctest::Approx(6000));
    CHECK(a.rear == doctest::Approx(4000));
    CHECK(a.front + a.rear == 10000.0);
    auto z = split_axle_power(0, p);
    CHECK(z.front == 0.0);
    CHECK(z.rear == 0.0);
    auto r = split_axle_power(-5000, p);
    CHECK(r.front == doctest::Approx(-3000));
    CHECK(r.rear == doctest::Approx(-2000));
    CHECK(r.front + r.rear == -5000.0);
}

TEST_CASE("vehicle params validation") {
    VehicleParams p;
    CHECK_NOTHROW(p.validate());
    p.rear_split = 0.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = VehicleParams{};
    p.dcac_efficiency = 1.2;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("motor efficiency interpolation") {
    auto m = default_motor_map(Axle::front);
    const auto& t = m.efficiency.a_axis();
    const auto& n = m.efficiency.b_axis();
    SUBCASE("nodes are exact") {
        CHECK(motor_efficiency(m, t[3], n[5]) == m.efficiency.at(3, 5));
        CHECK(motor_efficiency(m, t.back(), n.back()) == m.efficiency.at(t.size() - 1, n.size() - 1));
    }
    SUBCASE("cell midpoint is the mean of the four corners") {
        const double mid = 0.25 * (m.efficiency.at(2, 4) + m.efficiency.at(3, 4) + m.efficiency.at(2, 5) +
                                   m.efficiency.at(3, 5));
        CHECK(motor_efficiency(m, 0.5 * (t[2] + t[3]), 0.5 * (n[4] + n[5])) == doctest::Approx(mid).epsilon(1e-14));
    }
    SUBCASE("symmetric in torque sign") {
        CHECK(motor_efficiency(m, -80.0, 5000.0) == motor_efficiency(m, 80.0, 5000.0));
    }
    SUBCASE("out of range names the axis") {
        try {
            motor_efficiency(m, 200.0, 1000.0);
            FAIL("expected RangeError");
        } catch (const RangeError& e) {
            CHECK(e.axis() == "torque_nm");
        }
        try {
            motor_efficiency(m, 10.0, 20000.0);
            FAIL("expected RangeError");
        } catch (const RangeError& e) {
            CHECK(e.axis() == "speed_rpm");
        }
    }
    CHECK_NOTHROW(m.validate());
    CHECK_NOTHROW(default_motor_map(Axle::rear).validate());
}

TEST_CASE("fuel-cell hydrogen rate") {
    auto fc = default_fuel_cell();
    CHECK_NOTHROW(fc.validate());
    CHECK(fc_hydrogen_rate(fc, 0.0) == 0.0);
    const auto& xs = fc.h2_rate_curve.xs();
    CHECK(fc_hydrogen_rate(fc, xs[7]) == fc.h2_rate_curve.ys()[7]);
    CHECK_THROWS_AS(fc_hydrogen_rate(fc, fc.p_max + 1.0), RangeError);
    CHECK_THROWS_AS(fc_hydrogen_rate(fc, -1.0), RangeError);

    SUBCASE("constant 50% efficiency map") {
        FuelCellModel flat = fc;
        flat.efficiency_curve = Curve("eff", {0.0, fc.p_max}, {0.5, 0.5});
        flat.h2_rate_curve = h2_rate_from_efficiency(flat.efficiency_curve, flat.lhv_h2);
        CHECK(fc_hydrogen_rate(flat, 30000.0) == doctest::Approx(30000.0 / (1.2e8 * 0.5) * 1000.0).epsilon(1e-12));
        CHECK(fc_hydrogen_rate(flat, 30000.0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("map agrees with the efficiency definition and is monotone") {
        double prev = -1.0;
        for (double p = 0.0; p <= fc.p_max; p += 250.0) {
            const double m = fc_hydrogen_rate(fc, p);
            CHECK(m >= prev);
            prev = m;
            const double ideal = fc_hydrogen_rate_from_efficiency(fc, p);
            CHECK(m == doctest::Approx(ideal).epsilon(5e-3));
            // chemical power never below electrical output
            CHECK(m / 1000.0 * fc.lhv_h2 >= p * (1.0 - 1e-12));
        }
    }
    SUBCASE("peak efficiency near a quarter of rated power, 0.40 at rated") {
        CHECK(fc.efficiency_curve(0.25 * fc.p_max) == doctest::Approx(0.55).epsilon(1e-3));
        CHECK(fc.efficiency_curve(fc.p_max) == doctest::Approx(0.40).epsilon(1e-12));
    }
}

TEST_CASE("battery current") {
    auto b = default_battery();
    CHECK_NOTHROW(b.validate());
    CHECK(battery_current(b, 0.5, 0.0) == 0.0);
    CHECK(battery_current(350.0, 0.5, 10000.0) == doctest::Approx(350.0 - std::sqrt(102500.0)).epsilon(1e-12));
    CHECK(battery_current(350.0, 0.5, 10000.0) == doctest::Approx(29.844).epsilon(1e-4));
    const double pmax = 350.0 * 350.0 / (4.0 * 0.5);
    CHECK(battery_current(350.0, 0.5, pmax) == doctest::Approx(350.0 / (2.0 * 0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(battery_current(350.0, 0.5, pmax * 1.001), InfeasiblePowerError);

    SUBCASE("resistance curve chosen by sign") {
        CHECK(b.resistance(0.5, 1000.0) == doctest::Approx(0.515));
        CHECK(b.resistance(0.5, -1000.0) == doctest::Approx(0.465));
        CHECK(b.resistance(0.1, 1.0) == doctest::Approx(0.54));
        CHECK(b.resistance(0.9, -1.0) == doctest::Approx(0.44));
        CHECK(b.ocv(0.1) == doctest::Approx(320.0));
        CHECK(b.ocv(0.9) == doctest::Approx(400.0));
    }
    SUBCASE("power round trip and oracle agreement") {
        Rng rng(11);
        for (int i = 0; i < 2000; ++i) {
            const double soc = rng.uniform(b.soc_floor, b.soc_ceiling);
            const double p = rng.uniform(b.p_charge_min, b.p_discharge_max);
            const double u = b.ocv(soc), r = b.resistance(soc, p);
            const double cur = battery_current(b, soc, p);
            CHECK(cur * (u - cur * r) == doctest::Approx(p).epsilon(1e-9));
            CHECK(cur == doctest::Approx(oracle_current(u, r, p)).epsilon(1e-8));
            auto st = battery_state(b, soc, p);
            CHECK(st.terminal_voltage == u - r * st.current);
        }
    }
}

TEST_CASE("soc coulomb counting") {
    auto b = default_battery();
    CHECK(soc_step(b, 0.5, 0.0, 0.05).soc == 0.5);
    b.soc_floor = 0.0;
    b.soc_ceiling = 1.0;
    CHECK(soc_step(b, 1.0, 40.0, 3600.0).soc == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(0.5 - soc_step(b, 0.5, 40.0, 0.05).soc == doctest::Approx(1.3889e-5).epsilon(1e-4));
    auto d = default_battery();
    auto clamped = soc_step(d, 0.1000001, 100.0, 10.0);
    CHECK(clamped.clamped);
    CHECK(clamped.soc == d.soc_floor);
    CHECK_FALSE(soc_step(d, 0.5, 10.0, 0.05).clamped);
}

TEST_CASE("electrical demand uses both axle maps") {
    auto pt = default_powertrain();
    CHECK_NOTHROW(pt.validate());
    auto d0 = pt.electrical_demand(0.0, 0.0);
    CHECK(d0.p_load == 0.0);
    auto d = pt.electrical_demand(15.0, 0.5);
    CHECK(d.motor_eff > 0.7);
    CHECK(d.motor_eff < 0.96);
    CHECK(d.p_load == doctest::Approx(demand_power(15.0, 0.5, pt.vehicle, d.motor_eff)));
    CHECK(d.p_load > d.p_traction);
    auto r = pt.electrical_demand(15.0, -2.0);
    CHECK(r.p_load < 0.0);
    CHECK(r.p_load > r.p_traction);
}

TEST_CASE("vehicle config json and map csv round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fcev_test_maps";
    fs::create_directories(dir);
    auto base = default_powertrain();
    write_curve_csv(dir / "ocv.csv", base.battery.ocv_curve);
    write_motor_csv(dir / "front.csv", base.front_motor);
    nlohmann::json cfg = {{"vehicle", {{"mass", 2000.0}}},
                          {"battery", {{"capacity", 50.0}}},
                          {"maps", {{"ocv", "ocv.csv"}, {"front_motor", "front.csv"}}}};
    auto pt = load_powertrain(cfg, dir);
    CHECK(pt.vehicle.mass == 2000.0);
    CHECK(pt.battery.capacity == 50.0);
    CHECK(pt.battery.ocv_curve.ys() == base.battery.ocv_curve.ys());
    CHECK(pt.front_motor.efficiency.values() == base.front_motor.efficiency.values());

    nlohmann::json bad = {{"vehicle", {{"front_split", 0.7}}}};
    CHECK_THROWS_AS(load_powertrain(bad, dir), ValidationError);
    csv::write_text(dir / "bad.csv", "torque_nm,speed_rpm,eff\n0,0,0.9\n0,10,0.9\n5,0,0.9\n");
    CHECK_THROWS_AS(read_motor_csv(dir / "bad.csv", Axle::front), ParseError);
}
