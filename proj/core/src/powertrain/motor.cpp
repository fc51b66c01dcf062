#include "fcev/powertrain/motor.hpp"

#include <algorithm>
#include <cmath>

#include "fcev/common/error.hpp"

namespace fcev::powertrain {

std::string to_string(Axle axle) { return axle == Axle::front ? "front" : "rear"; }

void MotorMap::validate() const {
    const auto& t = efficiency.a_axis();
    const auto& n = efficiency.b_axis();
    if (t.empty() || n.empty()) throw ValidationError("motor map is empty");
    if (t.front() > 0.0 || t.back() < torque_max || n.front() > 0.0 || n.back() < speed_max) {
        throw ValidationError("motor map grid does not cover the torque/speed range");
    }
    for (double e : efficiency.values()) {
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("motor efficiency must lie in (0, 1)");
    }
}

double motor_efficiency(const MotorMap& map, double torque, double speed) {
    return map.efficiency(std::abs(torque), speed);
}

double motor_efficiency_clamped(const MotorMap& map, double torque, double speed) {
    const auto& t = map.efficiency.a_axis();
    const auto& n = map.efficiency.b_axis();
    return map.efficiency(std::clamp(std::abs(torque), t.front(), t.back()), std::clamp(speed, n.front(), n.back()));
}

MotorMap default_motor_map(Axle axle, double peak) {
    MotorMap m;
    m.axle = axle;
    m.torque_max = axle == Axle::front ? 137.0 : 195.0;
    m.speed_max = axle == Axle::front ? 14000.0 : 10000.0;
    constexpr std::size_t kPoints = 15;
    auto torque = linspace(0.0, m.torque_max, kPoints);
    auto speed = linspace(0.0, m.speed_max, kPoints);
    std::vector<double> eff;
    eff.reserve(kPoints * kPoints);
    for (double t : torque) {
        for (double n : speed) {
            const double tn = t / m.torque_max - 0.45;
            const double sn = n / m.speed_max - 0.45;
            eff.push_back(peak - 0.25 * tn * tn - 0.30 * sn * sn);
        }
    }
    m.efficiency = Grid2D("torque_nm", std::move(torque), "speed_rpm", std::move(speed), std::move(eff));
    return m;
}

}  // namespace fcev::powertrain
