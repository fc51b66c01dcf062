#pragma once

#include <cstdint>
#include <memory>

#include "fcev/common/rng.hpp"
#include "fcev/mpc/controller.hpp"

namespace fcev::harness {

/// Fuel-cell power range that keeps the battery inside its power limits for `p_load`.
struct FcRange {
    double lo = 0.0;
    double hi = 0.0;
};
FcRange fc_range(const powertrain::Powertrain& plant, double p_load);

/// Builds a decision from a fuel-cell request clamped into fc_range.
mpc::ControlDecision split_decision(const powertrain::Powertrain& plant, double p_load, double p_fc);

/// Fuel cell follows the demand plus a proportional SOC correction.
class ChargeSustainingController final : public mpc::Controller {
public:
    struct Params {
        double soc_target = 0.6;
        double gain = 200000.0;  // W per unit SOC error
    };
    ChargeSustainingController(std::shared_ptr<const powertrain::Powertrain> plant, Params params);
    std::string name() const override { return "rule_based"; }
    mpc::ControlDecision decide(const mpc::ControllerInput& in) override;

private:
    std::shared_ptr<const powertrain::Powertrain> plant_;
    Params params_;
};

/// Fuel cell at the highest power the battery can absorb.
class MaxFuelCellController final : public mpc::Controller {
public:
    explicit MaxFuelCellController(std::shared_ptr<const powertrain::Powertrain> plant);
    std::string name() const override { return "max_fc"; }
    mpc::ControlDecision decide(const mpc::ControllerInput& in) override;

private:
    std::shared_ptr<const powertrain::Powertrain> plant_;
};

/// Random fuel-cell levels held for random durations, for observer training
/// data. The level is a fraction of fc_range; draws lean toward charging when
/// the SOC is low and toward discharging when it is high.
class ExplorationController final : public mpc::Controller {
public:
    struct Params {
        std::size_t hold_min = 20;   // steps
        std::size_t hold_max = 100;  // steps
        double soc_low = 0.3;
        double soc_high = 0.85;
        std::uint64_t seed = 1;
    };
    ExplorationController(std::shared_ptr<const powertrain::Powertrain> plant, Params params);
    std::string name() const override { return "exploration"; }
    mpc::ControlDecision decide(const mpc::ControllerInput& in) override;
    void reset() override;

private:
    std::shared_ptr<const powertrain::Powertrain> plant_;
    Params params_;
    Rng rng_;
    double level_ = 0.5;
    std::size_t remaining_ = 0;
};

}  // namespace fcev::harness
