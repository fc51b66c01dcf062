#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcev/powertrain/plant.hpp"

namespace fcev::mpc {

/// Quantities held fixed across the horizon: battery terminal voltage,
/// resistance and fuel-cell power at step k.
struct OperatingPoint {
    double u_batt = 0.0;  // V
    double r_batt = 0.0;  // ohm
    double p_fc = 0.0;    // W
};

/// One receding-horizon instance. The control is the battery share of the
/// load, u = P_batt / P_load; steps with P_load <= 0 are pinned to u = 1.
struct HorizonProblem {
    double soc_0 = 0.6;
    std::vector<double> p_load_seq;  // W, one entry per prediction step
    OperatingPoint z;
    double dt = 0.05;

    std::vector<double> k;           // per-step weights
    double q1 = 1.0;
    double q2 = 1.0;
    double x_ref = 0.6;
    double y_ref = 0.0;              // g/s
    bool squared_state = false;

    std::vector<double> u_min, u_max;  // per-step band on the split ratio
    double p_batt_min = -40000.0, p_batt_max = 45000.0;
    double p_fc_min = 0.0, p_fc_max = 61560.0;
    double dp_fc_min = -2000.0, dp_fc_max = 2000.0;  // W per step
    std::vector<double> m, n;        // M u + N >= 0 per step
    double p_fc_prev = 0.0;          // fuel-cell power applied at step k - 1

    std::size_t horizon() const { return p_load_seq.size(); }
    bool active(std::size_t i) const { return p_load_seq[i] > 0.0; }
    /// Throws InfeasibleProblemError for unordered bounds or mismatched lengths.
    void validate() const;
};

struct SolverSettings {
    double tolerance = 1e-6;      // projected-gradient norm, kW units
    std::size_t max_iterations = 200;
    double fd_step = 1e-6;        // relative central-difference step
    double stall_tolerance = 1e-9;  // stop after 3 steps each gaining less than this times max(1, |J|)
};

struct SolverStats {
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    bool relaxed = false;         // a band or rate bound had to give way to stay feasible
    double wall_time = 0.0;       // s
    double projected_gradient = 0.0;
};

struct ControlSolution {
    std::vector<double> u_seq;
    std::vector<double> soc_traj;
    std::vector<double> y_traj;
    double objective = 0.0;
    SolverStats stats;
};

/// Tuning shared by both receding-horizon controllers.
struct MpcConfig {
    std::size_t horizon = 20;
    double dt = 0.05;
    double q1 = 1.0;
    double q2 = 100.0;
    double x_ref = 0.6;
    double y_ref = 0.0;
    std::vector<double> k;              // empty = all ones
    bool squared_state = false;
    double k1 = 0.3;
    double warm_start_fc_power = 25000.0;  // W; u0 = 1 - this / P_load
    double dp_fc_max = 2000.0;          // W per step, symmetric
    double equivalence_factor = 2.0;
    std::string h2_model = "map";       // map | linear
    std::string linearization = "iterate";  // iterate | frozen
    SolverSettings solver;

    void validate() const;
    nlohmann::json to_json() const;
    static MpcConfig from_json(const nlohmann::json& j);
    static MpcConfig from_json(const nlohmann::json& j, MpcConfig base);
};

/// Problem skeleton for the current state with the warm-start band
/// u0 +/- k1, M = P_load, N = P_fc_max - P_load, component boxes.
HorizonProblem make_problem(const MpcConfig& cfg, const powertrain::Powertrain& plant, double soc,
                            const OperatingPoint& z, std::vector<double> p_load_seq, double p_fc_prev);

/// Hydrogen-equivalent flow model y(u, P_load), g/s.
class OutputModel {
public:
    OutputModel(const powertrain::FuelCellModel& fc, double equivalence_factor, bool use_map);
    double operator()(double u, double p_load) const;
    /// P_fc <= 0 costs nothing; above rated power the map is extended linearly.
    double fc_rate(double p_fc) const;
    double battery_coefficient() const { return s_over_q_; }  // g/J

private:
    const powertrain::FuelCellModel* fc_;
    double s_over_q_;
    bool use_map_;
};

}  // namespace fcev::mpc
