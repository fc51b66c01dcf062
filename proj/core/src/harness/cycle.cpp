#include "fcev/harness/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"
#include "fcev/common/rng.hpp"

namespace fcev::harness {

std::vector<double> DrivingCycle::downsample(double stride) const {
    const auto every = static_cast<std::size_t>(std::llround(stride / dt));
    if (every == 0 || std::abs(static_cast<double>(every) * dt - stride) > 1e-9)
        throw ValidationError("cycle: stride must be a multiple of dt");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); i += every) out.push_back(v[i]);
    return out;
}

void DrivingCycle::validate() const {
    if (!(dt > 0.0)) throw ValidationError("cycle '" + name + "': dt must be positive");
    if (v.empty()) throw ValidationError("cycle '" + name + "': no samples");
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]) || v[i] < 0.0)
            throw ValidationError("cycle '" + name + "': sample " + std::to_string(i) + " is negative or not finite");
}

DrivingCycle resample(const std::vector<double>& t, const std::vector<double>& v, double dt, std::string name) {
    if (t.empty() || t.size() != v.size()) throw ValidationError("resample: need matching non-empty t and v");
    if (!(dt > 0.0)) throw ValidationError("resample: dt must be positive");
    DrivingCycle c;
    c.name = std::move(name);
    c.dt = dt;
    const auto n = static_cast<std::size_t>(std::floor(t.back() / dt + 1e-9)) + 1;
    c.v.resize(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i) * dt;
        while (seg + 2 < t.size() && t[seg + 1] < ti) ++seg;
        if (t.size() == 1) {
            c.v[i] = v[0];
            continue;
        }
        const double w = std::clamp((ti - t[seg]) / (t[seg + 1] - t[seg]), 0.0, 1.0);
        c.v[i] = (1.0 - w) * v[seg] + w * v[seg + 1];
    }
    c.validate();
    return c;
}

DrivingCycle parse_cycle(const std::string& text, double dt, std::string name) {
    const auto table = csv::parse(text, {"t_s", "v_mps"});
    if (table.rows.empty()) throw ParseError("cycle '" + name + "': no data rows", 2);
    std::vector<double> t, v;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::size_t row = i + 2;
        const double ti = table.rows[i][0], vi = table.rows[i][1];
        if (i == 0 && ti != 0.0) throw ParseError("cycle '" + name + "': row 2: time must start at 0", row);
        if (i > 0 && !(ti > t.back()))
            throw ParseError("cycle '" + name + "': row " + std::to_string(row) + ": time must increase strictly", row);
        if (!std::isfinite(vi) || vi < 0.0)
            throw ParseError("cycle '" + name + "': row " + std::to_string(row) + ": negative or non-finite speed",
                             row);
        t.push_back(ti);
        v.push_back(vi);
    }
    return resample(t, v, dt, std::move(name));
}

DrivingCycle load_cycle(const std::filesystem::path& path, double dt) {
    try {
        return parse_cycle(csv::read_text(path), dt, path.stem().string());
    } catch (const ParseError& e) {
        if (std::string(e.what()).find(path.string()) != std::string::npos) throw;
        throw ParseError(path.string() + ": " + e.what(), e.row());
    }
}

void write_cycle_csv(const std::filesystem::path& path, const DrivingCycle& cycle) {
    std::string text = "t_s,v_mps\n";
    for (std::size_t i = 0; i < cycle.size(); ++i) text += csv::fmt(cycle.time(i)) + "," + csv::fmt(cycle.v[i]) + "\n";
    csv::write_text(path, text);
}

CycleKind cycle_kind_from_string(const std::string& s) {
    if (s == "urban") return CycleKind::urban;
    if (s == "mixed") return CycleKind::mixed;
    throw ValidationError("unknown cycle kind '" + s + "' (expected urban or mixed)");
}

namespace {

struct Profile {
    double cruise_lo, cruise_hi;  // m/s
    double hold_lo, hold_hi;      // s at cruise
    double stop_lo, stop_hi;      // s at standstill
    double accel_lo, accel_hi;    // m/s^2
    double stop_probability;      // chance a cruise ends in a stop rather than a speed change
};

constexpr Profile kUrban{5.0, 15.0, 8.0, 35.0, 6.0, 25.0, 0.7, 1.8, 0.75};
constexpr Profile kSuburban{14.0, 27.0, 25.0, 90.0, 4.0, 12.0, 0.4, 1.2, 0.25};

class Driver {
public:
    Driver(const CycleGenConfig& cfg, const powertrain::Powertrain& plant) : cfg_(cfg), plant_(plant) {}

    // Largest admissible step from v toward v + a over one second.
    double limit(double v, double a) const {
        a = std::clamp(a, -cfg_.accel_limit, cfg_.accel_limit);
        if (v + a < 0.0) a = -v;
        if (ok(v, a)) return a;
        double lo = 0.0, hi = a;
        for (int i = 0; i < 40; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ok(v, mid) ? lo : hi) = mid;
        }
        return lo;
    }

private:
    bool ok(double v, double a) const {
        for (int k = 0; k <= 4; ++k) {
            const double p = plant_.electrical_demand(v + a * k / 4.0, a).p_load;
            if (std::abs(p) > cfg_.power_limit) return false;
        }
        return true;
    }

    const CycleGenConfig& cfg_;
    const powertrain::Powertrain& plant_;
};

}  // namespace

DrivingCycle generate_cycle(const CycleGenConfig& cfg, const powertrain::Powertrain& plant) {
    if (!(cfg.duration >= 10.0)) throw ValidationError("generate_cycle: duration must be at least 10 s");
    if (!(cfg.accel_limit > 0.0) || !(cfg.power_limit > 0.0))
        throw ValidationError("generate_cycle: limits must be positive");
    Rng rng(cfg.seed);
    const Driver driver(cfg, plant);
    const auto seconds = static_cast<std::size_t>(std::floor(cfg.duration));
    std::vector<double> v{0.0};
    v.reserve(seconds + 1);

    auto profile_at = [&](std::size_t t) -> const Profile& {
        if (cfg.kind == CycleKind::urban) return kUrban;
        const double f = static_cast<double>(t) / static_cast<double>(seconds);
        return (f > 0.35 && f < 0.8) ? kSuburban : kUrban;
    };

    double target = 0.0, accel = 1.0, decel = 1.0, wobble_amp = 0.0, wobble_period = 20.0;
    double phase_end = rng.uniform(5.0, 15.0);  // initial standstill
    bool stopping = false;
    for (std::size_t t = 0; t < seconds; ++t) {
        const double now = static_cast<double>(t);
        const Profile& pr = profile_at(t);
        const double vk = v.back();
        const double remaining = static_cast<double>(seconds - t);
        if (remaining < vk / 0.7 + 8.0) {
            target = 0.0;
            decel = 1.0;
            stopping = true;
        } else if (now >= phase_end) {
            if (target == 0.0 && vk < 0.05) {
                target = rng.uniform(pr.cruise_lo, pr.cruise_hi);
                accel = rng.uniform(pr.accel_lo, pr.accel_hi);
                phase_end = now + target / accel + rng.uniform(pr.hold_lo, pr.hold_hi);
                wobble_amp = rng.uniform(0.0, 0.06) * target;
                wobble_period = rng.uniform(12.0, 40.0);
                stopping = false;
            } else if (!stopping && rng.uniform() < pr.stop_probability) {
                target = 0.0;
                decel = rng.uniform(pr.accel_lo, pr.accel_hi);
                phase_end = now + vk / decel + rng.uniform(pr.stop_lo, pr.stop_hi);
                stopping = true;
            } else if (!stopping) {
                target = rng.uniform(pr.cruise_lo, pr.cruise_hi);
                accel = decel = rng.uniform(pr.accel_lo, pr.accel_hi);
                phase_end = now + std::abs(target - vk) / accel + rng.uniform(pr.hold_lo, pr.hold_hi);
            } else {
                phase_end = now + 1.0;  // still braking
            }
        }
        double goal = target;
        if (target > 0.0) goal += wobble_amp * std::sin(2.0 * std::numbers::pi * now / wobble_period);
        const double want = std::clamp(goal - vk, -decel, accel);
        v.push_back(std::max(0.0, vk + driver.limit(vk, want)));
    }

    std::vector<double> t(v.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    return resample(t, v, cfg.dt, cfg.kind == CycleKind::urban ? "urban" : "mixed");
}

}  // namespace fcev::harness
