#pragma once

#include <string>

#include "fcev/common/interp.hpp"

namespace fcev::powertrain {

enum class Axle { front, rear };

std::string to_string(Axle axle);

/// Motor efficiency map over |torque| (Nm) x speed (rpm). The torque axis
/// covers [0, torque_max]; motoring and generating share the map.
struct MotorMap {
    Axle axle = Axle::front;
    double torque_max = 0.0;  // Nm
    double speed_max = 0.0;   // rpm
    Grid2D efficiency;        // a = torque_nm, b = speed_rpm

    void validate() const;
};

/// Bilinear efficiency lookup, symmetric in torque sign. Throws RangeError
/// naming "torque_nm" or "speed_rpm" when the operating point is off the map.
double motor_efficiency(const MotorMap& map, double torque, double speed);

/// Same lookup with the operating point clamped onto the map edges.
double motor_efficiency_clamped(const MotorMap& map, double torque, double speed);

/// Synthetic paraboloid map peaking at `peak` (0.95 by default).
MotorMap default_motor_map(Axle axle, double peak = 0.95);

}  // namespace fcev::powertrain
