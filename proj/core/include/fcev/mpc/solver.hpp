#pragma once

#include <span>
#include <vector>

#include "fcev/learning/polynomial.hpp"
#include "fcev/mpc/linearization.hpp"
#include "fcev/mpc/problem.hpp"

namespace fcev::mpc {

/// SOC rate model used inside the horizon.
class StateObserver {
public:
    virtual ~StateObserver() = default;
    /// dSOC/dt at step i for split u under load p_load when the predicted SOC is `soc`.
    virtual double rate(std::size_t i, double u, double p_load, double soc) const = 0;
    /// False when rate() ignores `soc`; lets the solver difference one step at a time.
    virtual bool state_dependent() const = 0;
};

/// Linearized observer. In iterate mode B and C are re-evaluated at every
/// candidate control along the predicted SOC; in frozen mode they are fixed
/// at the point supplied on construction.
class LinearizedObserver final : public StateObserver {
public:
    enum class Mode { iterate, frozen };

    LinearizedObserver(const powertrain::BatteryModel& battery, const OutputModel& output, Mode mode,
                       const HorizonProblem& problem, std::span<const double> u_lin);

    double rate(std::size_t i, double u, double p_load, double soc) const override;
    bool state_dependent() const override { return mode_ == Mode::iterate; }
    /// Jacobians along (u_lin, predicted SOC) for the given problem.
    LinearizedModel model(const HorizonProblem& problem, std::span<const double> u) const;

private:
    Linearization at(double u, double p_load, double soc) const;

    const powertrain::BatteryModel* battery_;
    const OutputModel* output_;
    Mode mode_;
    LinearizedModel frozen_;
};

/// Per-step polynomial in battery power, evaluated at P_batt = u * P_load.
class PolynomialObserver final : public StateObserver {
public:
    explicit PolynomialObserver(std::vector<learning::SocPolynomial> polys) : polys_(std::move(polys)) {}
    double rate(std::size_t i, double u, double p_load, double soc) const override;
    bool state_dependent() const override { return false; }
    const std::vector<learning::SocPolynomial>& polynomials() const { return polys_; }

private:
    std::vector<learning::SocPolynomial> polys_;
};

/// Recursive accumulation x(i+1) = x(i) + T * poly_i(P_batt). Throws
/// DomainError naming the step when P_batt leaves a polynomial's domain.
std::vector<double> lrmpc_rollout(std::span<const learning::SocPolynomial> polys, const HorizonProblem& problem,
                                  std::span<const double> u);

/// Sum over i of k_i [q1 (y_i - y_ref)^2 + q2 (x_i - x_ref)], or with the
/// state deviation squared when problem.squared_state is set.
double objective(const HorizonProblem& problem, std::span<const double> soc_traj, std::span<const double> y_traj);

struct Evaluation {
    Rollout trajectory;
    double objective = 0.0;
};

Evaluation evaluate(const HorizonProblem& problem, const StateObserver& observer, const OutputModel& output,
                    std::span<const double> u);

/// Per-step fuel-cell power intervals (kW) and the rate links between
/// consecutive steps, made mutually consistent so every point of every
/// interval extends to a feasible trajectory.
struct FeasibleSet {
    std::vector<double> lo, hi;
    std::vector<char> linked;  // linked[i]: rate bound between steps i-1 and i
    double rate_lo = 0.0, rate_hi = 0.0;
    bool relaxed = false;

    std::size_t size() const { return lo.size(); }
    void project(std::span<double> w) const;
    bool contains(std::span<const double> w, double tol) const;
};

/// Throws InfeasibleProblemError when a step's hard box is empty.
FeasibleSet feasible_set(const HorizonProblem& problem);

/// Minimizes the horizon objective. `initial_u`, when non-empty, is tried as
/// a starting point next to the band centre; the better one is used.
ControlSolution solve(const HorizonProblem& problem, const StateObserver& observer, const OutputModel& output,
                      const SolverSettings& settings, std::span<const double> initial_u = {});

}  // namespace fcev::mpc
