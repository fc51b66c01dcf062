#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcev/common/error.hpp"
#include "fcev/harness/cycle.hpp"
#include "fcev/harness/step_record.hpp"
#include "fcev/mpc/controller.hpp"
#include "fcev/velocity/predictor.hpp"

namespace fcev::harness {

/// hysteresis: EV while SOC > soc_hev_on, HEV until SOC >= soc_hev_off.
enum class ModeRule { hysteresis, always_ev, always_hev };

/// Source of the controller's future demand sequence.
///   oracle: the cycle's own future velocities
///   predictor: the velocity model, refreshed once per model stride
///   constant: the current demand repeated
enum class Preview { oracle, predictor, constant };

struct SimConfig {
    double dt = 0.05;
    double initial_soc = 0.6;
    double soc_hev_on = 0.55;
    double soc_hev_off = 0.60;
    ModeRule mode_rule = ModeRule::hysteresis;
    Preview preview = Preview::oracle;
    double equivalence_factor = 2.0;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
    static SimConfig from_json(const nlohmann::json& j, SimConfig base);
};

/// A step could not be applied; state() holds everything known at that step.
class StepError : public Error {
public:
    StepError(const std::string& what, nlohmann::json state) : Error(what), state_(std::move(state)) {}
    const nlohmann::json& state() const noexcept { return state_; }

private:
    nlohmann::json state_;
};

struct SimSummary {
    std::string controller;
    std::size_t horizon = 1;
    double h2_fc_g = 0.0;
    double h2_equiv_g = 0.0;
    double final_soc = 0.0;
    double sim_wall_time = 0.0;    // s, whole run
    double mean_solve_time = 0.0;  // s, over steps where the controller ran
    double max_solve_time = 0.0;
    std::size_t steps = 0;
    std::size_t controller_steps = 0;
    std::size_t hev_steps = 0;
    std::size_t relaxed_steps = 0;
    std::size_t clamped_steps = 0;
    double max_balance_residual = 0.0;  // |P_fc + P_batt - P_load| over the largest of 1 W, |P_fc|, |P_batt|, |P_load|
};

struct SimResult {
    std::vector<StepRecord> records;
    SimSummary summary;
};

/// Bus demand applied at step i of `cycle`: the plant demand at v_i with the
/// forward-difference acceleration, braking limited to the battery's charge limit.
double cycle_demand(const DrivingCycle& cycle, const powertrain::Powertrain& plant, std::size_t i);

/// One record per interval of the cycle. The controller is reset first and
/// only consulted in HEV mode for positive demand; otherwise the battery
/// carries the whole demand. `velocity_model` is required for Preview::predictor.
SimResult run_simulation(const DrivingCycle& cycle, const SimConfig& config, const powertrain::Powertrain& plant,
                         mpc::Controller& controller, const velocity::VelocityModel* velocity_model = nullptr);

}  // namespace fcev::harness
