#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fcev/harness/step_record.hpp"
#include "fcev/learning/tree.hpp"

namespace fcev::learning {

inline constexpr std::array<std::string_view, 5> kObserverFeatures{"p_batt", "p_load", "u_batt", "r_batt", "p_fc"};

struct ObserverSample {
    double p_batt = 0.0;
    double p_load = 0.0;
    double u_batt = 0.0;
    double r_batt = 0.0;
    double p_fc = 0.0;
    double delta_soc = 0.0;

    std::array<double, 5> features() const { return {p_batt, p_load, u_batt, r_batt, p_fc}; }
};

/// One sample per consecutive pair of records: the features of step k and
/// SOC(k+1) - SOC(k); steps whose SOC update was clamped are skipped. Throws
/// ValidationError for logs shorter than two steps.
std::vector<ObserverSample> generate_training_set(std::span<const StepRecord> log);

Dataset to_dataset(std::span<const ObserverSample> samples);

/// Deterministic shuffled split; the first element holds (1 - holdout) of the rows.
std::pair<std::vector<ObserverSample>, std::vector<ObserverSample>> split_holdout(
    std::span<const ObserverSample> samples, double holdout, std::uint64_t seed);

void write_training_csv(const std::filesystem::path& path, std::span<const ObserverSample> samples);
std::vector<ObserverSample> read_training_csv(const std::filesystem::path& path);

}  // namespace fcev::learning
