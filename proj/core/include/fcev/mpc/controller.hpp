#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fcev/learning/explicit_table.hpp"
#include "fcev/learning/polynomial.hpp"
#include "fcev/mpc/solver.hpp"

namespace fcev::mpc {

/// Measurements available to a controller at step k.
struct ControllerInput {
    double soc = 0.6;
    OperatingPoint z;                 // terminal voltage, resistance, fuel-cell power at step k - 1
    std::vector<double> p_load_pre;   // W; entry 0 is the current demand
};

struct ControlDecision {
    double u = 1.0;        // battery share of the current demand
    double p_fc = 0.0;     // W
    double p_batt = 0.0;   // W
    double solve_time = 0.0;
    std::shared_ptr<const ControlSolution> solution;  // absent for rule-based policies
};

/// Power-split policy used in HEV mode for positive demand.
class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual ControlDecision decide(const ControllerInput& in) = 0;
    /// Clears warm-start state between simulations.
    virtual void reset() {}
    /// Horizon length the controller wants in p_load_pre (1 for rule-based policies).
    virtual std::size_t horizon() const { return 1; }
};

/// Receding-horizon controller with the linearized SOC observer.
class TmpcController final : public Controller {
public:
    TmpcController(std::shared_ptr<const powertrain::Powertrain> plant, MpcConfig cfg);
    std::string name() const override { return "tmpc"; }
    ControlDecision decide(const ControllerInput& in) override;
    void reset() override { previous_fc_.clear(); }
    std::size_t horizon() const override { return cfg_.horizon; }

private:
    std::shared_ptr<const powertrain::Powertrain> plant_;
    MpcConfig cfg_;
    OutputModel output_;
    std::vector<double> previous_fc_;
};

/// Per-step rate polynomials from the table: stage-one filter at z, stage-two
/// filter at each predicted load, degree-7 fit of dSOC / sample_dt against P_batt.
/// Queries outside the table axes are clamped onto them first.
std::vector<learning::SocPolynomial> build_step_polynomials(const learning::ExplicitTable& table,
                                                            const OperatingPoint& z,
                                                            const std::vector<double>& p_load_seq);

/// One pass of the online LRMPC algorithm: warm-start band, constraint pair,
/// filters, fits and solve. The caller applies u_seq[0].
ControlSolution lrmpc_step(const powertrain::Powertrain& plant, const learning::ExplicitTable& table,
                          const MpcConfig& cfg, const ControllerInput& in, std::span<const double> initial_u = {});

/// Receding-horizon controller with the explicit-table observer.
class LrmpcController final : public Controller {
public:
    LrmpcController(std::shared_ptr<const powertrain::Powertrain> plant, MpcConfig cfg,
                    std::shared_ptr<const learning::ExplicitTable> table);
    std::string name() const override { return "lrmpc"; }
    ControlDecision decide(const ControllerInput& in) override;
    void reset() override { previous_fc_.clear(); }
    std::size_t horizon() const override { return cfg_.horizon; }

private:
    std::shared_ptr<const powertrain::Powertrain> plant_;
    MpcConfig cfg_;
    std::shared_ptr<const learning::ExplicitTable> table_;
    std::vector<double> previous_fc_;
};

}  // namespace fcev::mpc
