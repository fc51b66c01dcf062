#include "fcev/harness/policies.hpp"

#include <algorithm>

#include "fcev/common/error.hpp"

namespace fcev::harness {

FcRange fc_range(const powertrain::Powertrain& plant, double p_load) {
    const auto& b = plant.battery;
    const auto& fc = plant.fuel_cell;
    FcRange r{std::max(fc.p_min, p_load - b.p_discharge_max), std::min(fc.p_max, p_load - b.p_charge_min)};
    if (r.lo > r.hi)
        throw InfeasibleProblemError("demand " + std::to_string(p_load) + " W exceeds combined source limits");
    return r;
}

mpc::ControlDecision split_decision(const powertrain::Powertrain& plant, double p_load, double p_fc) {
    const auto r = fc_range(plant, p_load);
    mpc::ControlDecision d;
    d.p_fc = std::clamp(p_fc, r.lo, r.hi);
    d.p_batt = p_load - d.p_fc;
    d.u = p_load != 0.0 ? d.p_batt / p_load : 1.0;
    return d;
}

ChargeSustainingController::ChargeSustainingController(std::shared_ptr<const powertrain::Powertrain> plant,
                                                       Params params)
    : plant_(std::move(plant)), params_(params) {
    if (!(params_.gain >= 0.0)) throw ValidationError("charge-sustaining gain must be nonnegative");
}

mpc::ControlDecision ChargeSustainingController::decide(const mpc::ControllerInput& in) {
    const double load = in.p_load_pre.at(0);
    return split_decision(*plant_, load, load + params_.gain * (params_.soc_target - in.soc));
}

MaxFuelCellController::MaxFuelCellController(std::shared_ptr<const powertrain::Powertrain> plant)
    : plant_(std::move(plant)) {}

mpc::ControlDecision MaxFuelCellController::decide(const mpc::ControllerInput& in) {
    const double load = in.p_load_pre.at(0);
    return split_decision(*plant_, load, fc_range(*plant_, load).hi);
}

ExplorationController::ExplorationController(std::shared_ptr<const powertrain::Powertrain> plant, Params params)
    : plant_(std::move(plant)), params_(params), rng_(params.seed) {
    if (params_.hold_min == 0 || params_.hold_min > params_.hold_max)
        throw ValidationError("exploration: need 0 < hold_min <= hold_max");
}

void ExplorationController::reset() {
    rng_ = Rng(params_.seed);
    level_ = 0.5;
    remaining_ = 0;
}

mpc::ControlDecision ExplorationController::decide(const mpc::ControllerInput& in) {
    const double load = in.p_load_pre.at(0);
    if (remaining_ == 0) {
        double lo = 0.0, hi = 1.0;
        if (in.soc < params_.soc_low) lo = 0.5;
        if (in.soc > params_.soc_high) hi = 0.5;
        level_ = rng_.uniform(lo, hi);
        remaining_ = params_.hold_min + rng_.index(params_.hold_max - params_.hold_min + 1);
    }
    --remaining_;
    const auto r = fc_range(*plant_, load);
    return split_decision(*plant_, load, r.lo + level_ * (r.hi - r.lo));
}

}  // namespace fcev::harness
