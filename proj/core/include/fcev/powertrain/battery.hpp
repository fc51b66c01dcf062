#pragma once

#include "fcev/common/interp.hpp"

namespace fcev::powertrain {

/// Internal-resistance equivalent circuit of the traction pack. Power is
/// positive when discharging.
struct BatteryModel {
    double capacity = 40.0;             // Ah
    Curve ocv_curve;                    // U_OCV(SOC), V
    Curve r_discharge_curve;            // R(SOC), ohm
    Curve r_charge_curve;               // R(SOC), ohm
    double p_charge_min = -40000.0;     // W (negative)
    double p_discharge_max = 45000.0;   // W
    double soc_floor = 0.1;
    double soc_ceiling = 0.9;

    void validate() const;

    double capacity_coulombs() const { return 3600.0 * capacity; }
    double ocv(double soc) const { return ocv_curve.clamped(soc); }
    /// Charge or discharge resistance selected by the sign of `p_batt`.
    double resistance(double soc, double p_batt) const;
};

struct BatteryState {
    double soc = 0.0;
    double terminal_voltage = 0.0;  // V
    double current = 0.0;          // A, positive = discharge
};

/// Pack current for power `p_batt`, taking the smaller root of
/// P = I (U_OCV - I R). Throws InfeasiblePowerError when U_OCV^2 - 4 R P < 0.
double battery_current(const BatteryModel& model, double soc, double p_batt);

/// Same root with explicit open-circuit voltage and resistance.
double battery_current(double u_ocv, double r, double p_batt);

/// State after drawing `p_batt` at `soc`: terminal voltage is U_OCV - R I.
BatteryState battery_state(const BatteryModel& model, double soc, double p_batt);

struct SocUpdate {
    double soc = 0.0;
    bool clamped = false;
};

/// Coulomb counting over `dt` seconds, clamped to [soc_floor, soc_ceiling].
SocUpdate soc_step(const BatteryModel& model, double soc, double current, double dt);

/// Affine OCV from 320 V at SOC 0.1 to 400 V at SOC 0.9; resistances affine
/// and decreasing in SOC (discharge 0.54 to 0.49 ohm, charge 0.49 to 0.44 ohm).
BatteryModel default_battery();

}  // namespace fcev::powertrain
