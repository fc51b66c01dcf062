#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fcev::learning {

/// Evenly spaced grid axis.
struct Axis {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    std::size_t points = 2;

    double coord(std::size_t i) const;
    std::vector<double> coords() const;
    void validate() const;
};

/// Axis order is p_batt, p_load, u_batt, r_batt, p_fc.
using TableAxes = std::array<Axis, 5>;

TableAxes default_table_axes();
/// 37 x 33 x 13 x 7 x 35 = 3,888,885 points over the default ranges.
TableAxes full_scale_table_axes();
TableAxes axes_from_json(const nlohmann::json& j, const TableAxes& base);
nlohmann::json axes_to_json(const TableAxes& axes);

/// Row-major p_load x p_batt section of the table at fixed (u_batt, r_batt, p_fc).
struct TableSlice {
    std::vector<double> p_load;
    std::vector<double> p_batt;
    std::vector<double> values;  // values[i_load * p_batt.size() + i_batt]
    std::array<std::size_t, 3> snapped{};  // indices on the u_batt, r_batt, p_fc axes

    std::span<const double> row(std::size_t i_load) const {
        return {values.data() + i_load * p_batt.size(), p_batt.size()};
    }
};

struct TableCurve {
    std::vector<double> p_batt;
    std::vector<double> delta_soc;
    std::size_t p_load_index = 0;
};

struct ExplicitTable {
    TableAxes axes;
    std::vector<double> values;       // row-major, last axis fastest
    double sample_dt = 0.05;          // s; each value is the SOC change over one such step
    nlohmann::json provenance;

    std::size_t size() const { return values.size(); }
    std::size_t flat_index(const std::array<std::size_t, 5>& idx) const;
    double at(const std::array<std::size_t, 5>& idx) const { return values[flat_index(idx)]; }
    std::array<double, 5> point(std::size_t flat) const;
    /// Index of the axis coordinate closest to `value`; ties go to the lower index.
    /// Throws RangeError naming the axis when value lies outside [min, max].
    std::size_t nearest(std::size_t axis, double value) const;
    void validate() const;
};

using PointPredictor = std::function<double(std::span<const double>)>;

inline constexpr std::size_t kDefaultTableBudgetBytes = std::size_t{1} << 30;

/// Fills values[i] = predict(point(i)). Throws BudgetError naming the grid
/// product when the value array would exceed `budget_bytes`.
ExplicitTable build_explicit_table(const PointPredictor& predict, const TableAxes& axes, double sample_dt,
                                   nlohmann::json provenance = {},
                                   std::size_t budget_bytes = kDefaultTableBudgetBytes);

TableSlice filter_stage1(const ExplicitTable& table, double u_batt, double r_batt, double p_fc);
TableCurve filter_stage2(const TableSlice& slice, double p_load);

void save_table(const std::filesystem::path& path, const ExplicitTable& table);
ExplicitTable load_table(const std::filesystem::path& path);
/// Lossless CSV: axis1..axis5,delta_soc.
void export_table_csv(const std::filesystem::path& path, const ExplicitTable& table);
/// Rebuilds values from a CSV export; the grid coordinates must match `axes` exactly.
ExplicitTable import_table_csv(const std::filesystem::path& path, const TableAxes& axes, double sample_dt);

}  // namespace fcev::learning
