#include "fcev/powertrain/plant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"

namespace fcev::powertrain {

void Powertrain::validate() const {
    vehicle.validate();
    fuel_cell.validate();
    battery.validate();
    front_motor.validate();
    rear_motor.validate();
}

Demand Powertrain::electrical_demand(double v, double accel) const {
    Demand d;
    const double force = tractive_force(v, accel, vehicle);
    d.p_traction = force * v;
    if (d.p_traction == 0.0) return d;

    const auto forces = split_axle_power(force, vehicle);
    const double wheel_rpm = v / vehicle.tire_radius * 30.0 / std::numbers::pi;
    const double eta_f = motor_efficiency_clamped(front_motor, forces.front * vehicle.tire_radius / vehicle.front_gear_ratio,
                                                  wheel_rpm * vehicle.front_gear_ratio);
    const double eta_r = motor_efficiency_clamped(rear_motor, forces.rear * vehicle.tire_radius / vehicle.rear_gear_ratio,
                                                  wheel_rpm * vehicle.rear_gear_ratio);
    // Effective efficiency reproducing the per-axle sum through demand_power().
    if (d.p_traction > 0.0) {
        d.motor_eff = 1.0 / (vehicle.front_split / eta_f + vehicle.rear_split / eta_r);
    } else {
        d.motor_eff = vehicle.front_split * eta_f + vehicle.rear_split * eta_r;
    }
    d.p_load = demand_power(v, accel, vehicle, d.motor_eff);
    return d;
}

Powertrain default_powertrain() {
    Powertrain p;
    p.fuel_cell = default_fuel_cell();
    p.battery = default_battery();
    p.front_motor = default_motor_map(Axle::front);
    p.rear_motor = default_motor_map(Axle::rear);
    return p;
}

Curve read_curve_csv(const std::filesystem::path& path, const std::string& name) {
    auto t = csv::read(path, {"x", "y"});
    std::vector<double> x, y;
    for (const auto& r : t.rows) {
        x.push_back(r[0]);
        y.push_back(r[1]);
    }
    return Curve(name, std::move(x), std::move(y));
}

void write_curve_csv(const std::filesystem::path& path, const Curve& curve) {
    std::string s = "x,y\n";
    for (std::size_t i = 0; i < curve.xs().size(); ++i) {
        s += csv::fmt(curve.xs()[i]) + "," + csv::fmt(curve.ys()[i]) + "\n";
    }
    csv::write_text(path, s);
}

MotorMap read_motor_csv(const std::filesystem::path& path, Axle axle) {
    auto t = csv::read(path, {"torque_nm", "speed_rpm", "eff"});
    std::map<std::pair<double, double>, double> cells;
    std::vector<double> torque, speed;
    for (const auto& r : t.rows) {
        cells[{r[0], r[1]}] = r[2];
        torque.push_back(r[0]);
        speed.push_back(r[1]);
    }
    std::sort(torque.begin(), torque.end());
    torque.erase(std::unique(torque.begin(), torque.end()), torque.end());
    std::sort(speed.begin(), speed.end());
    speed.erase(std::unique(speed.begin(), speed.end()), speed.end());
    if (cells.size() != torque.size() * speed.size() || t.rows.size() != cells.size()) {
        throw ParseError(path.string() + ": motor map is not a rectangular grid");
    }
    std::vector<double> eff;
    for (double tq : torque) {
        for (double n : speed) eff.push_back(cells.at({tq, n}));
    }
    MotorMap m;
    m.axle = axle;
    m.torque_max = torque.back();
    m.speed_max = speed.back();
    m.efficiency = Grid2D("torque_nm", torque, "speed_rpm", speed, std::move(eff));
    return m;
}

void write_motor_csv(const std::filesystem::path& path, const MotorMap& map) {
    std::string s = "torque_nm,speed_rpm,eff\n";
    const auto& t = map.efficiency.a_axis();
    const auto& n = map.efficiency.b_axis();
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < n.size(); ++j) {
            s += csv::fmt(t[i]) + "," + csv::fmt(n[j]) + "," + csv::fmt(map.efficiency.at(i, j)) + "\n";
        }
    }
    csv::write_text(path, s);
}

namespace {

void assign(const nlohmann::json& obj, const char* key, double& field) {
    if (obj.contains(key)) field = obj.at(key).get<double>();
}

}  // namespace

Powertrain load_powertrain(const nlohmann::json& config, const std::filesystem::path& base_dir, Powertrain p) {
    try {
        if (config.contains("vehicle")) {
            const auto& v = config.at("vehicle");
            assign(v, "mass", p.vehicle.mass);
            assign(v, "gravity", p.vehicle.gravity);
            assign(v, "rolling_coeff", p.vehicle.rolling_coeff);
            assign(v, "drag_coeff", p.vehicle.drag_coeff);
            assign(v, "frontal_area", p.vehicle.frontal_area);
            assign(v, "air_density", p.vehicle.air_density);
            assign(v, "rotating_mass_factor", p.vehicle.rotating_mass_factor);
            assign(v, "tire_radius", p.vehicle.tire_radius);
            assign(v, "front_split", p.vehicle.front_split);
            assign(v, "rear_split", p.vehicle.rear_split);
            assign(v, "dcac_efficiency", p.vehicle.dcac_efficiency);
            assign(v, "dcdc_efficiency", p.vehicle.dcdc_efficiency);
            assign(v, "front_gear_ratio", p.vehicle.front_gear_ratio);
            assign(v, "rear_gear_ratio", p.vehicle.rear_gear_ratio);
        }
        if (config.contains("battery")) {
            const auto& b = config.at("battery");
            assign(b, "capacity", p.battery.capacity);
            assign(b, "p_charge_min", p.battery.p_charge_min);
            assign(b, "p_discharge_max", p.battery.p_discharge_max);
            assign(b, "soc_floor", p.battery.soc_floor);
            assign(b, "soc_ceiling", p.battery.soc_ceiling);
        }
        if (config.contains("fuel_cell")) {
            const auto& f = config.at("fuel_cell");
            assign(f, "p_min", p.fuel_cell.p_min);
            assign(f, "p_max", p.fuel_cell.p_max);
            assign(f, "c_h2", p.fuel_cell.c_h2);
            assign(f, "lhv_h2", p.fuel_cell.lhv_h2);
        }
        if (config.contains("maps")) {
            const auto& m = config.at("maps");
            auto path = [&](const char* key) { return base_dir / m.at(key).get<std::string>(); };
            if (m.contains("ocv")) p.battery.ocv_curve = read_curve_csv(path("ocv"), "ocv");
            if (m.contains("r_discharge")) p.battery.r_discharge_curve = read_curve_csv(path("r_discharge"), "r_discharge");
            if (m.contains("r_charge")) p.battery.r_charge_curve = read_curve_csv(path("r_charge"), "r_charge");
            if (m.contains("fc_efficiency")) {
                p.fuel_cell.efficiency_curve = read_curve_csv(path("fc_efficiency"), "fc_efficiency");
                if (!m.contains("fc_h2_rate")) {
                    p.fuel_cell.h2_rate_curve = h2_rate_from_efficiency(p.fuel_cell.efficiency_curve, p.fuel_cell.lhv_h2);
                }
            }
            if (m.contains("fc_h2_rate")) p.fuel_cell.h2_rate_curve = read_curve_csv(path("fc_h2_rate"), "h2_rate");
            if (m.contains("front_motor")) p.front_motor = read_motor_csv(path("front_motor"), Axle::front);
            if (m.contains("rear_motor")) p.rear_motor = read_motor_csv(path("rear_motor"), Axle::rear);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("vehicle config: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace fcev::powertrain
