#pragma once

namespace fcev::powertrain {

/// Static vehicle constants of a 4WD fuel-cell vehicle. With the default gear
/// ratios both motors stay inside their torque/speed envelopes on the bundled cycles.
struct VehicleParams {
    double mass = 1860.0;               // kg
    double gravity = 9.81;              // m/s^2
    double rolling_coeff = 0.015;
    double drag_coeff = 0.3;
    double frontal_area = 2.0;          // m^2
    double air_density = 1.18;          // kg/m^3
    double rotating_mass_factor = 1.05;
    double tire_radius = 0.35;          // m
    double front_split = 0.6;
    double rear_split = 0.4;
    double dcac_efficiency = 0.95;
    double dcdc_efficiency = 0.8775;    // folded into the fuel-cell system map
    double front_gear_ratio = 10.0;
    double rear_gear_ratio = 8.0;

    /// Throws ValidationError when an invariant is broken.
    void validate() const;
};

/// Longitudinal driving force on a flat road, N. Includes air density in the drag term.
double tractive_force(double v, double accel, const VehicleParams& params);

/// Electrical demand at the DC bus, W. Traction divides by the drive-chain
/// efficiency; braking (negative wheel power) multiplies by it.
double demand_power(double v, double accel, const VehicleParams& params, double motor_eff);

struct AxlePower {
    double front = 0.0;
    double rear = 0.0;
};

/// Fixed front/rear distribution. `rear` is computed as the remainder so the
/// two parts sum to the input exactly.
AxlePower split_axle_power(double p_traction, const VehicleParams& params);

}  // namespace fcev::powertrain
