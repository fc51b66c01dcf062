#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fcev/powertrain/battery.hpp"
#include "fcev/powertrain/fuel_cell.hpp"
#include "fcev/powertrain/motor.hpp"
#include "fcev/powertrain/vehicle.hpp"

namespace fcev::powertrain {

/// Bus-level demand at one instant.
struct Demand {
    double p_traction = 0.0;  // wheel power, W
    double p_load = 0.0;      // bus power, W
    double motor_eff = 1.0;   // effective drive-chain motor efficiency (both axles)
};

/// The complete plant. Immutable after construction; safe to share read-only.
struct Powertrain {
    VehicleParams vehicle;
    FuelCellModel fuel_cell;
    BatteryModel battery;
    MotorMap front_motor;
    MotorMap rear_motor;

    void validate() const;

    /// Bus demand with per-axle motor efficiencies looked up at the motors'
    /// operating points (clamped onto the maps).
    Demand electrical_demand(double v, double accel) const;
};

/// Default vehicle constants plus the synthetic component maps.
Powertrain default_powertrain();

/// Applies a vehicle config JSON on top of `base`. Recognised objects:
/// "vehicle", "battery", "fuel_cell" (keys are the struct field names) and
/// "maps" (CSV paths for ocv, r_discharge, r_charge, fc_efficiency,
/// fc_h2_rate, front_motor, rear_motor; relative to `base_dir`).
Powertrain load_powertrain(const nlohmann::json& config, const std::filesystem::path& base_dir,
                           Powertrain base = default_powertrain());

/// 1-D curve CSV with header `x,y`.
Curve read_curve_csv(const std::filesystem::path& path, const std::string& name);
void write_curve_csv(const std::filesystem::path& path, const Curve& curve);

/// Motor grid CSV `torque_nm,speed_rpm,eff` on a rectangular grid.
MotorMap read_motor_csv(const std::filesystem::path& path, Axle axle);
void write_motor_csv(const std::filesystem::path& path, const MotorMap& map);

}  // namespace fcev::powertrain
