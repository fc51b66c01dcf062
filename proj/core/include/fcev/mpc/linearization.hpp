#pragma once

#include <span>
#include <vector>

#include "fcev/mpc/problem.hpp"

namespace fcev::mpc {

/// State and output Jacobians of the SOC / hydrogen-flow model at one point.
struct Linearization {
    double A = 0.0, B = 0.0, C = 0.0;
    double D = 0.0, E = 0.0, F = 0.0, G = 0.0;
};

/// Inputs of the linearization at one prediction step.
struct LinearizationInput {
    double u_ocv = 0.0;         // V
    double r_batt = 0.0;        // ohm
    double capacity_c = 0.0;    // C
    double p_batt = 0.0;        // W
    double p_load = 0.0;        // W, nonzero
    double c_h2 = 0.0;          // g/J
    double s_over_q = 0.0;      // g/J, equivalence factor over heating value
};

/// Throws InfeasibleProblemError when U_OCV^2 - 4 R P_batt <= 0.
Linearization linearize(const LinearizationInput& in);

/// Exact SOC rate, 1/s.
double soc_rate(double u_ocv, double r_batt, double capacity_c, double p_batt);

struct LinearizedModel {
    std::vector<Linearization> steps;

    /// Lower-triangular step-scaled accumulations: row i holds
    /// T * [B(0) .. B(i)] (resp. C) in its first i + 1 columns.
    std::vector<double> stacked_b(double dt) const;
    std::vector<double> stacked_c(double dt) const;
};

struct Rollout {
    std::vector<double> soc;
    std::vector<double> y;
};

/// x(i+1) = x(i) + T (B u + C v); y(i+1) = E u + F v + G with A = D = 0.
Rollout tmpc_rollout(const LinearizedModel& model, const HorizonProblem& problem, std::span<const double> u);
/// Same prediction through the stacked matrices X = 1 x0 + B~ U + C~ V.
Rollout tmpc_rollout_stacked(const LinearizedModel& model, const HorizonProblem& problem,
                             std::span<const double> u);

}  // namespace fcev::mpc
