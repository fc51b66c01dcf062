#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcev/powertrain/plant.hpp"

namespace fcev::harness {

/// Velocity trace on a uniform grid t_i = i * dt.
struct DrivingCycle {
    std::string name;
    double dt = 0.05;
    std::vector<double> v;  // m/s

    std::size_t size() const { return v.size(); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt; }
    double duration() const { return v.empty() ? 0.0 : time(v.size() - 1); }
    /// Samples at whole multiples of `stride` seconds, for the velocity predictor.
    std::vector<double> downsample(double stride = 1.0) const;
    void validate() const;
};

/// Linear interpolation of (t, v) onto the dt grid from 0 to the last time.
/// Times must start at 0 and increase strictly.
DrivingCycle resample(const std::vector<double>& t, const std::vector<double>& v, double dt, std::string name);

/// Cycle CSV `t_s,v_mps`. ParseError carries the 1-based row for a missing
/// header, an empty file, non-increasing time or a negative speed.
DrivingCycle parse_cycle(const std::string& text, double dt, std::string name);
DrivingCycle load_cycle(const std::filesystem::path& path, double dt = 0.05);
void write_cycle_csv(const std::filesystem::path& path, const DrivingCycle& cycle);

enum class CycleKind { urban, mixed };
CycleKind cycle_kind_from_string(const std::string& s);

struct CycleGenConfig {
    CycleKind kind = CycleKind::urban;
    double duration = 1800.0;    // s
    double dt = 0.05;            // output grid
    double accel_limit = 3.0;    // m/s^2, both directions
    double power_limit = 40000.0;  // W at the bus, both directions
    std::uint64_t seed = 1;
};

/// Seeded stop-and-go generator on a 1 s grid, linearly resampled to dt.
/// Accelerations are reduced wherever the bus demand of `plant` would leave
/// [-power_limit, power_limit]. Starts and ends at standstill.
DrivingCycle generate_cycle(const CycleGenConfig& config, const powertrain::Powertrain& plant);

}  // namespace fcev::harness
