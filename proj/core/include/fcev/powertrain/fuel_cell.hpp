#pragma once

#include "fcev/common/interp.hpp"

namespace fcev::powertrain {

/// Fuel-cell system model: net output power to the bus vs. efficiency and
/// hydrogen mass flow.
struct FuelCellModel {
    double p_min = 0.0;       // W
    double p_max = 61560.0;   // W
    Curve efficiency_curve;   // eta_fc(P_fc)
    Curve h2_rate_curve;      // g/s vs P_fc
    double c_h2 = 0.0;        // g/J, linear consumption coefficient used by the controllers
    double lhv_h2 = 1.2e8;    // J/kg

    void validate() const;
};

/// Hydrogen mass flow from the map, g/s. Throws RangeError outside [p_min, p_max].
double fc_hydrogen_rate(const FuelCellModel& model, double p_fc);

/// Ideal flow from the efficiency curve, P / (LHV * eta), in g/s.
double fc_hydrogen_rate_from_efficiency(const FuelCellModel& model, double p_fc);

/// Synthetic map: concave quadratic efficiency peaking at 0.55 at a quarter of
/// rated power and falling to 0.40 at rated power. The flow curve is tabulated
/// from the efficiency curve; c_h2 is the flow coefficient at peak efficiency.
FuelCellModel default_fuel_cell();

/// Rebuilds the flow curve from an efficiency curve (same nodes).
Curve h2_rate_from_efficiency(const Curve& efficiency, double lhv_h2);

}  // namespace fcev::powertrain
