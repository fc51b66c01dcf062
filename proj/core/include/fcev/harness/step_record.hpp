#pragma once

#include <string_view>

namespace fcev {

enum class DriveMode { ev, hev };

constexpr std::string_view to_string(DriveMode m) { return m == DriveMode::ev ? "ev" : "hev"; }

/// One simulation step. `soc` is the state at the start of the step; the
/// powers, current and terminal voltage are those applied during [t, t + dt].
struct StepRecord {
    double t = 0.0;
    double v = 0.0;
    double p_load = 0.0;
    double p_fc = 0.0;
    double p_batt = 0.0;
    double soc = 0.0;
    double u_batt = 0.0;
    double r_batt = 0.0;
    double i_batt = 0.0;
    double h2_fc_cum = 0.0;     // g, through the end of the step
    double h2_equiv_cum = 0.0;  // g, through the end of the step
    DriveMode mode = DriveMode::ev;
    double solve_time = 0.0;
    bool soc_clamped = false;   // the update leaving this step hit a bound
};

}  // namespace fcev
