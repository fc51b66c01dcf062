#include "fcev/powertrain/battery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcev/common/error.hpp"

namespace fcev::powertrain {

void BatteryModel::validate() const {
    if (!(capacity > 0.0)) throw ValidationError("battery.capacity must be positive");
    if (!(p_charge_min < 0.0 && p_discharge_max > 0.0)) {
        throw ValidationError("battery: require p_charge_min < 0 < p_discharge_max");
    }
    if (!(0.0 <= soc_floor && soc_floor < soc_ceiling && soc_ceiling <= 1.0)) {
        throw ValidationError("battery: require 0 <= soc_floor < soc_ceiling <= 1");
    }
    if (ocv_curve.empty() || r_discharge_curve.empty() || r_charge_curve.empty()) {
        throw ValidationError("battery: curves missing");
    }
    const auto& u = ocv_curve.ys();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] > 0.0) || (i > 0 && u[i] < u[i - 1])) {
            throw ValidationError("battery: OCV must be positive and nondecreasing in SOC");
        }
    }
    for (const Curve* c : {&r_discharge_curve, &r_charge_curve}) {
        for (double r : c->ys()) {
            if (!(r > 0.0)) throw ValidationError("battery: resistances must be positive");
        }
    }
    for (double s : linspace(soc_floor, soc_ceiling, 33)) {
        if (r_charge_curve.clamped(s) > r_discharge_curve.clamped(s)) {
            throw ValidationError("battery: charge resistance must not exceed discharge resistance");
        }
        const double u0 = ocv(s);
        if (u0 * u0 - 4.0 * r_discharge_curve.clamped(s) * p_discharge_max < 0.0) {
            std::ostringstream os;
            os << "battery: p_discharge_max infeasible at SOC " << s;
            throw ValidationError(os.str());
        }
    }
}

double BatteryModel::resistance(double soc, double p_batt) const {
    return p_batt >= 0.0 ? r_discharge_curve.clamped(soc) : r_charge_curve.clamped(soc);
}

double battery_current(double u_ocv, double r, double p_batt) {
    const double disc = u_ocv * u_ocv - 4.0 * r * p_batt;
    if (disc < 0.0) {
        std::ostringstream os;
        os << "battery power " << p_batt << " W exceeds pack capability (U_OCV " << u_ocv << " V, R " << r
           << " ohm)";
        throw InfeasiblePowerError(os.str());
    }
    // Rationalized form of (U - sqrt(disc)) / 2R; avoids cancellation near P = 0.
    return 2.0 * p_batt / (u_ocv + std::sqrt(disc));
}

double battery_current(const BatteryModel& model, double soc, double p_batt) {
    return battery_current(model.ocv(soc), model.resistance(soc, p_batt), p_batt);
}

BatteryState battery_state(const BatteryModel& model, double soc, double p_batt) {
    const double u = model.ocv(soc);
    const double r = model.resistance(soc, p_batt);
    const double i = battery_current(u, r, p_batt);
    return {soc, u - r * i, i};
}

SocUpdate soc_step(const BatteryModel& model, double soc, double current, double dt) {
    const double next = soc - current * dt / model.capacity_coulombs();
    const double bounded = std::clamp(next, model.soc_floor, model.soc_ceiling);
    return {bounded, bounded != next};
}

BatteryModel default_battery() {
    BatteryModel b;
    // Affine laws evaluated at SOC 0 and 1 so the in-band values hold on [0.1, 0.9].
    auto affine = [](double at_01, double at_09, double s) { return at_01 + (at_09 - at_01) * (s - 0.1) / 0.8; };
    const std::vector<double> soc{0.0, 1.0};
    b.ocv_curve = Curve("ocv", soc, {affine(320.0, 400.0, 0.0), affine(320.0, 400.0, 1.0)});
    b.r_discharge_curve = Curve("r_discharge", soc, {affine(0.54, 0.49, 0.0), affine(0.54, 0.49, 1.0)});
    b.r_charge_curve = Curve("r_charge", soc, {affine(0.49, 0.44, 0.0), affine(0.49, 0.44, 1.0)});
    return b;
}

}  // namespace fcev::powertrain
