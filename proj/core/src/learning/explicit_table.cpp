#include "fcev/learning/explicit_table.hpp"

#include <cmath>
#include <string>

#include "fcev/common/container.hpp"
#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"
#include "fcev/common/parallel.hpp"
#include "fcev/learning/observer_data.hpp"

namespace fcev::learning {

namespace {

constexpr std::string_view kMagic = "FCEVTBL1";

std::string grid_product(const TableAxes& axes) {
    std::string s;
    std::size_t n = 1;
    for (const auto& a : axes) {
        if (!s.empty()) s += 'x';
        s += std::to_string(a.points);
        n *= a.points;
    }
    return s + " = " + std::to_string(n) + " points";
}

}  // namespace

double Axis::coord(std::size_t i) const {
    if (i + 1 == points) return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(points - 1);
}

std::vector<double> Axis::coords() const {
    std::vector<double> c(points);
    for (std::size_t i = 0; i < points; ++i) c[i] = coord(i);
    return c;
}

void Axis::validate() const {
    if (points < 2) throw ValidationError("axis '" + name + "' needs at least 2 points");
    if (!(std::isfinite(min) && std::isfinite(max) && min < max)) {
        throw ValidationError("axis '" + name + "' must have finite min < max");
    }
}

TableAxes default_table_axes() {
    return {Axis{"p_batt", -40000.0, 45000.0, 9}, Axis{"p_load", 0.0, 70000.0, 15},
            Axis{"u_batt", 280.0, 420.0, 7}, Axis{"r_batt", 0.44, 0.54, 7}, Axis{"p_fc", 0.0, 61560.0, 9}};
}

TableAxes full_scale_table_axes() {
    auto a = default_table_axes();
    a[0].points = 37;
    a[1].points = 33;
    a[2].points = 13;
    a[3].points = 7;
    a[4].points = 35;
    return a;
}

TableAxes axes_from_json(const nlohmann::json& j, const TableAxes& base) {
    TableAxes axes = base;
    try {
        for (auto& a : axes) {
            if (!j.contains(a.name)) continue;
            const auto& e = j.at(a.name);
            a.min = e.value("min", a.min);
            a.max = e.value("max", a.max);
            a.points = e.value("points", a.points);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("table axes: ") + e.what());
    }
    for (const auto& a : axes) a.validate();
    return axes;
}

nlohmann::json axes_to_json(const TableAxes& axes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& a : axes) {
        j.push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"points", a.points}, {"spacing", "linear"}});
    }
    return j;
}

std::size_t ExplicitTable::flat_index(const std::array<std::size_t, 5>& idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < 5; ++d) {
        if (idx[d] >= axes[d].points) throw RangeError(axes[d].name, "grid index out of range on " + axes[d].name);
        flat = flat * axes[d].points + idx[d];
    }
    return flat;
}

std::array<double, 5> ExplicitTable::point(std::size_t flat) const {
    std::array<double, 5> p{};
    for (std::size_t d = 5; d-- > 0;) {
        p[d] = axes[d].coord(flat % axes[d].points);
        flat /= axes[d].points;
    }
    return p;
}

std::size_t ExplicitTable::nearest(std::size_t axis, double value) const {
    const auto& a = axes[axis];
    if (!(value >= a.min && value <= a.max)) {
        throw RangeError(a.name, a.name + " = " + std::to_string(value) + " outside table range [" +
                                     std::to_string(a.min) + ", " + std::to_string(a.max) + "]");
    }
    std::size_t best = 0;
    double best_d = std::abs(value - a.coord(0));
    for (std::size_t i = 1; i < a.points; ++i) {
        const double d = std::abs(value - a.coord(i));
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void ExplicitTable::validate() const {
    std::size_t n = 1;
    for (std::size_t d = 0; d < 5; ++d) {
        axes[d].validate();
        if (axes[d].name != kObserverFeatures[d]) {
            throw ValidationError("table axis " + std::to_string(d) + " must be " + std::string(kObserverFeatures[d]));
        }
        n *= axes[d].points;
    }
    if (values.size() != n) throw ValidationError("table value count does not match " + grid_product(axes));
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("table holds a non-finite value");
    }
    if (!(sample_dt > 0.0)) throw ValidationError("table sample_dt must be positive");
}

ExplicitTable build_explicit_table(const PointPredictor& predict, const TableAxes& axes, double sample_dt,
                                   nlohmann::json provenance, std::size_t budget_bytes) {
    std::size_t n = 1;
    for (const auto& a : axes) {
        a.validate();
        n *= a.points;
    }
    if (n > budget_bytes / sizeof(double)) {
        throw BudgetError("table grid " + grid_product(axes) + " exceeds the memory budget of " +
                          std::to_string(budget_bytes) + " bytes");
    }
    ExplicitTable t;
    t.axes = axes;
    t.sample_dt = sample_dt;
    t.provenance = std::move(provenance);
    t.values.resize(n);
    const std::size_t block = axes[4].points * axes[3].points;
    parallel_for(n / block, [&](std::size_t b) {
        for (std::size_t i = b * block; i < (b + 1) * block; ++i) {
            const auto p = t.point(i);
            t.values[i] = predict(p);
        }
    });
    t.validate();
    return t;
}

TableSlice filter_stage1(const ExplicitTable& table, double u_batt, double r_batt, double p_fc) {
    TableSlice s;
    s.snapped = {table.nearest(2, u_batt), table.nearest(3, r_batt), table.nearest(4, p_fc)};
    s.p_batt = table.axes[0].coords();
    s.p_load = table.axes[1].coords();
    s.values.resize(s.p_load.size() * s.p_batt.size());
    for (std::size_t il = 0; il < s.p_load.size(); ++il) {
        for (std::size_t ib = 0; ib < s.p_batt.size(); ++ib) {
            s.values[il * s.p_batt.size() + ib] = table.at({ib, il, s.snapped[0], s.snapped[1], s.snapped[2]});
        }
    }
    return s;
}

TableCurve filter_stage2(const TableSlice& slice, double p_load) {
    const double lo = slice.p_load.front(), hi = slice.p_load.back();
    if (!(p_load >= lo && p_load <= hi)) {
        throw RangeError("p_load", "p_load = " + std::to_string(p_load) + " outside table range [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < slice.p_load.size(); ++i) {
        if (std::abs(p_load - slice.p_load[i]) < std::abs(p_load - slice.p_load[best])) best = i;
    }
    const auto row = slice.row(best);
    return {slice.p_batt, std::vector<double>(row.begin(), row.end()), best};
}

void save_table(const std::filesystem::path& path, const ExplicitTable& table) {
    table.validate();
    ByteWriter w;
    w.f64s(table.values);
    nlohmann::json header{{"kind", "explicit_table"},
                          {"axes", axes_to_json(table.axes)},
                          {"sample_dt", table.sample_dt},
                          {"count", table.values.size()},
                          {"provenance", table.provenance}};
    write_container(path, kMagic, header, w.bytes());
}

ExplicitTable load_table(const std::filesystem::path& path) {
    auto c = read_container(path, kMagic);
    ExplicitTable t;
    std::size_t count = 0;
    try {
        const auto& axes = c.header.at("axes");
        if (!axes.is_array() || axes.size() != 5) throw ParseError(path.string() + ": table needs 5 axes");
        for (std::size_t d = 0; d < 5; ++d) {
            t.axes[d] = Axis{axes[d].at("name").get<std::string>(), axes[d].at("min").get<double>(),
                             axes[d].at("max").get<double>(), axes[d].at("points").get<std::size_t>()};
        }
        t.sample_dt = c.header.at("sample_dt").get<double>();
        count = c.header.at("count").get<std::size_t>();
        t.provenance = c.header.value("provenance", nlohmann::json{});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad table header: " + e.what());
    }
    ByteReader in(c.payload);
    t.values = in.f64s(count);
    if (!in.done()) throw ParseError(path.string() + ": trailing bytes after table values");
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return t;
}

void export_table_csv(const std::filesystem::path& path, const ExplicitTable& table) {
    std::string text = "axis1,axis2,axis3,axis4,axis5,delta_soc\n";
    text.reserve(table.size() * 120);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto p = table.point(i);
        for (double v : p) text += csv::fmt(v) + ',';
        text += csv::fmt(table.values[i]) + '\n';
    }
    csv::write_text(path, text);
}

ExplicitTable import_table_csv(const std::filesystem::path& path, const TableAxes& axes, double sample_dt) {
    const auto parsed = csv::read(path, {"axis1", "axis2", "axis3", "axis4", "axis5", "delta_soc"});
    ExplicitTable t;
    t.axes = axes;
    t.sample_dt = sample_dt;
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.points;
    if (parsed.rows.size() != n) throw ParseError(path.string() + ": expected " + grid_product(axes));
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = t.point(i);
        for (std::size_t d = 0; d < 5; ++d) {
            if (parsed.rows[i][d] != p[d]) throw ParseError(path.string() + ": grid coordinate mismatch", i + 2);
        }
        t.values[i] = parsed.rows[i][5];
    }
    t.validate();
    return t;
}

}  // namespace fcev::learning
