#include "fcev/powertrain/vehicle.hpp"

#include <cmath>
#include <string>

#include "fcev/common/error.hpp"

namespace fcev::powertrain {

namespace {

void positive(double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ValidationError(std::string("vehicle.") + name + " must be positive");
}

void efficiency(double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw ValidationError(std::string("vehicle.") + name + " must lie in (0, 1]");
}

}  // namespace

void VehicleParams::validate() const {
    positive(mass, "mass");
    positive(gravity, "gravity");
    positive(rolling_coeff, "rolling_coeff");
    positive(drag_coeff, "drag_coeff");
    positive(frontal_area, "frontal_area");
    positive(air_density, "air_density");
    positive(rotating_mass_factor, "rotating_mass_factor");
    positive(tire_radius, "tire_radius");
    positive(front_split, "front_split");
    positive(rear_split, "rear_split");
    positive(front_gear_ratio, "front_gear_ratio");
    positive(rear_gear_ratio, "rear_gear_ratio");
    efficiency(dcac_efficiency, "dcac_efficiency");
    efficiency(dcdc_efficiency, "dcdc_efficiency");
    if (std::abs(front_split + rear_split - 1.0) > 1e-12) {
        throw ValidationError("vehicle.front_split + vehicle.rear_split must equal 1");
    }
}

double tractive_force(double v, double accel, const VehicleParams& p) {
    return p.mass * p.gravity * p.rolling_coeff + 0.5 * p.air_density * p.drag_coeff * p.frontal_area * v * v +
           p.rotating_mass_factor * p.mass * accel;
}

double demand_power(double v, double accel, const VehicleParams& p, double motor_eff) {
    const double wheel = tractive_force(v, accel, p) * v;
    const double chain = p.dcac_efficiency * motor_eff;
    return wheel >= 0.0 ? wheel / chain : wheel * chain;
}

AxlePower split_axle_power(double p_traction, const VehicleParams& p) {
    const double front = p.front_split * p_traction;
    return {front, p_traction - front};
}

}  // namespace fcev::powertrain
