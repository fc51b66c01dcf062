#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fcev/learning/tree.hpp"
#include "fcev/powertrain/plant.hpp"
#include "fcev/velocity/deep_forest.hpp"

namespace fcev::velocity {

/// Velocities and accelerations on the predictor's 1 s grid.
struct VelocitySample {
    double v_k = 0.0;
    double a_k = 0.0;
    double v_next = 0.0;
    double a_next = 0.0;
};

/// Acceleration at k is the backward difference v_k - v_{k-1} over one stride.
/// Features are the last `lag` velocities then the last `lag` accelerations,
/// oldest first; the target is the next increment v_{k+1} - v_k.
learning::Dataset make_velocity_dataset(std::span<const double> v, std::size_t lag, double stride = 1.0);
std::vector<VelocitySample> make_velocity_samples(std::span<const double> v, double stride = 1.0);

struct OneStep {
    double v_next = 0.0;
    double a_next = 0.0;
    bool clamped = false;  // raw prediction was negative and was lifted to 0
};

struct VelocityModelConfig {
    CascadeConfig cascade;
    double stride = 1.0;  // s
    std::size_t lag() const { return cascade.mgsp.feature_dim / 2; }
    void validate() const;
    nlohmann::json to_json() const;
    static VelocityModelConfig from_json(const nlohmann::json& j);
};

class VelocityModel {
public:
    /// Trains on one or more 1 s velocity traces. Throws ValidationError when
    /// the traces yield fewer samples than CV folds.
    static VelocityModel train(std::span<const std::vector<double>> traces, const VelocityModelConfig& config);

    /// `history` holds at least lag()+1 velocities at stride spacing, newest last.
    OneStep predict_one_step(std::span<const double> history) const;
    /// Synthesizes a history by extrapolating (v_k, a_k) backwards at constant acceleration.
    OneStep predict_one_step(double v_k, double a_k) const;
    /// Recursive one-step predictions at the native stride, linearly interpolated
    /// at times dt, 2 dt, ..., steps * dt after the newest history sample.
    std::vector<double> predict_horizon(std::span<const double> history, std::size_t steps, double dt) const;
    std::vector<double> predict_horizon(double v_k, double a_k, std::size_t steps, double dt) const;

    std::size_t lag() const { return config_.lag(); }
    double stride() const { return config_.stride; }
    std::size_t history_length() const { return lag() + 1; }
    const CascadeForest& cascade() const { return cascade_; }
    const VelocityModelConfig& config() const { return config_; }

    void save(const std::filesystem::path& path) const;
    static VelocityModel load(const std::filesystem::path& path);

private:
    std::vector<double> synth_history(double v_k, double a_k) const;

    VelocityModelConfig config_;
    CascadeForest cascade_;
};

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
};

/// Throws ShapeError on empty or mismatched input.
Metrics metrics(std::span<const double> predicted, std::span<const double> actual);

/// Error of h-stride-ahead predictions over every usable origin of `v`.
Metrics evaluate_horizon(const VelocityModel& model, std::span<const double> v, std::size_t horizon);
/// Same origins as evaluate_horizon, predicting v_{k+h} = v_k.
Metrics persistence_horizon(std::span<const double> v, std::size_t lag, std::size_t horizon);

/// Bus power of a velocity sequence sampled every dt. Acceleration is the
/// backward difference from the previous element (from `v_prev` for the first),
/// so element i depends only on v_prev and v[0..i].
std::vector<double> to_demand_power(std::span<const double> v_seq, double dt, double v_prev,
                                    const powertrain::VehicleParams& params, double motor_eff);
/// Same with the motor efficiency looked up on the plant's maps.
std::vector<double> to_demand_power(std::span<const double> v_seq, double dt, double v_prev,
                                    const powertrain::Powertrain& plant);

/// `t_s,v_mps` at uniform 1 s spacing (tolerance 1e-6 s); velocities finite and >= 0.
std::vector<double> read_velocity_csv(const std::filesystem::path& path);
void write_velocity_csv(const std::filesystem::path& path, std::span<const double> v, double stride = 1.0);

}  // namespace fcev::velocity
