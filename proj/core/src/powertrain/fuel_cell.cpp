#include "fcev/powertrain/fuel_cell.hpp"

#include <cmath>

#include "fcev/common/error.hpp"

namespace fcev::powertrain {

void FuelCellModel::validate() const {
    if (!(p_max > p_min && p_min >= 0.0)) throw ValidationError("fuel_cell: require 0 <= p_min < p_max");
    if (!(c_h2 > 0.0)) throw ValidationError("fuel_cell.c_h2 must be positive");
    if (!(lhv_h2 > 0.0)) throw ValidationError("fuel_cell.lhv_h2 must be positive");
    if (efficiency_curve.empty() || h2_rate_curve.empty()) throw ValidationError("fuel_cell: curves missing");
    if (efficiency_curve.x_min() > p_min || efficiency_curve.x_max() < p_max || h2_rate_curve.x_min() > p_min ||
        h2_rate_curve.x_max() < p_max) {
        throw ValidationError("fuel_cell: curves must cover [p_min, p_max]");
    }
    for (double e : efficiency_curve.ys()) {
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("fuel_cell: efficiency must lie in (0, 1)");
    }
    const auto& m = h2_rate_curve.ys();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] < 0.0 || (i > 0 && m[i] < m[i - 1])) {
            throw ValidationError("fuel_cell: hydrogen rate must be nonnegative and nondecreasing");
        }
    }
}

double fc_hydrogen_rate(const FuelCellModel& model, double p_fc) {
    if (!(p_fc >= model.p_min && p_fc <= model.p_max)) {
        throw RangeError("p_fc", "p_fc " + std::to_string(p_fc) + " W outside fuel-cell range");
    }
    return model.h2_rate_curve(p_fc);
}

double fc_hydrogen_rate_from_efficiency(const FuelCellModel& model, double p_fc) {
    return p_fc / (model.lhv_h2 * model.efficiency_curve(p_fc)) * 1000.0;
}

Curve h2_rate_from_efficiency(const Curve& efficiency, double lhv_h2) {
    std::vector<double> rate;
    rate.reserve(efficiency.xs().size());
    for (std::size_t i = 0; i < efficiency.xs().size(); ++i) {
        rate.push_back(efficiency.xs()[i] / (lhv_h2 * efficiency.ys()[i]) * 1000.0);
    }
    return Curve("h2_rate", efficiency.xs(), std::move(rate));
}

FuelCellModel default_fuel_cell() {
    FuelCellModel fc;
    constexpr double kPeak = 0.55;
    constexpr double kRated = 0.40;
    constexpr double kPeakAt = 0.25;
    const double curvature = (kPeak - kRated) / ((1.0 - kPeakAt) * (1.0 - kPeakAt));
    auto p = linspace(fc.p_min, fc.p_max, 41);
    std::vector<double> eff;
    for (double x : p) {
        const double r = x / fc.p_max - kPeakAt;
        eff.push_back(kPeak - curvature * r * r);
    }
    fc.efficiency_curve = Curve("fc_efficiency", p, std::move(eff));
    fc.h2_rate_curve = h2_rate_from_efficiency(fc.efficiency_curve, fc.lhv_h2);
    fc.c_h2 = 1000.0 / (fc.lhv_h2 * kPeak);
    return fc;
}

}  // namespace fcev::powertrain
