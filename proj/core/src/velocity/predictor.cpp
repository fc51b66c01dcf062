#include "fcev/velocity/predictor.hpp"

#include <cmath>
#include <string>

#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"

namespace fcev::velocity {

namespace {

constexpr std::string_view kMagic = "FCEVVEL1";
constexpr int kVersion = 1;

void check_trace(std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]) || v[i] < 0.0)
            throw ValidationError("velocity trace: sample " + std::to_string(i) + " is negative or not finite");
}

}  // namespace

learning::Dataset make_velocity_dataset(std::span<const double> v, std::size_t lag, double stride) {
    if (lag == 0) throw ValidationError("velocity dataset: lag must be positive");
    check_trace(v);
    learning::Dataset d;
    d.n_features = 2 * lag;
    std::vector<double> f(2 * lag);
    for (std::size_t k = lag; k + 1 < v.size(); ++k) {
        for (std::size_t j = 0; j < lag; ++j) {
            const std::size_t idx = k + 1 - lag + j;
            f[j] = v[idx];
            f[lag + j] = (v[idx] - v[idx - 1]) / stride;
        }
        d.push(f, v[k + 1] - v[k]);
    }
    return d;
}

std::vector<VelocitySample> make_velocity_samples(std::span<const double> v, double stride) {
    check_trace(v);
    std::vector<VelocitySample> out;
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        out.push_back({v[k], (v[k] - v[k - 1]) / stride, v[k + 1], (v[k + 1] - v[k]) / stride});
    return out;
}

void VelocityModelConfig::validate() const {
    cascade.validate();
    if (cascade.mgsp.feature_dim % 2 != 0)
        throw ValidationError("velocity model: feature_dim must be even (velocities plus accelerations)");
    if (!(stride > 0.0)) throw ValidationError("velocity model: stride must be positive");
}

nlohmann::json VelocityModelConfig::to_json() const {
    auto j = cascade.to_json();
    j["stride"] = stride;
    return j;
}

VelocityModelConfig VelocityModelConfig::from_json(const nlohmann::json& j) {
    VelocityModelConfig c;
    c.cascade = CascadeConfig::from_json(j);
    c.stride = j.value("stride", c.stride);
    c.validate();
    return c;
}

VelocityModel VelocityModel::train(std::span<const std::vector<double>> traces, const VelocityModelConfig& config) {
    config.validate();
    learning::Dataset all;
    all.n_features = 2 * config.lag();
    for (const auto& t : traces) {
        const auto d = make_velocity_dataset(t, config.lag(), config.stride);
        all.x.insert(all.x.end(), d.x.begin(), d.x.end());
        all.y.insert(all.y.end(), d.y.begin(), d.y.end());
    }
    VelocityModel m;
    m.config_ = config;
    m.cascade_ = CascadeForest::train(all, config.cascade);
    return m;
}

OneStep VelocityModel::predict_one_step(std::span<const double> history) const {
    const std::size_t lag = this->lag();
    if (history.size() < lag + 1)
        throw ShapeError("velocity model: need " + std::to_string(lag + 1) + " history samples, got " +
                         std::to_string(history.size()));
    const auto h = history.last(lag + 1);
    std::vector<double> f(2 * lag);
    for (std::size_t j = 0; j < lag; ++j) {
        f[j] = h[j + 1];
        f[lag + j] = (h[j + 1] - h[j]) / config_.stride;
    }
    const double v_k = h[lag];
    OneStep out;
    out.v_next = v_k + cascade_.predict(f);
    if (out.v_next < 0.0) {
        out.v_next = 0.0;
        out.clamped = true;
    }
    out.a_next = (out.v_next - v_k) / config_.stride;
    return out;
}

std::vector<double> VelocityModel::synth_history(double v_k, double a_k) const {
    std::vector<double> h(lag() + 1);
    for (std::size_t j = 0; j <= lag(); ++j)
        h[lag() - j] = std::max(0.0, v_k - static_cast<double>(j) * a_k * config_.stride);
    return h;
}

OneStep VelocityModel::predict_one_step(double v_k, double a_k) const {
    return predict_one_step(synth_history(v_k, a_k));
}

std::vector<double> VelocityModel::predict_horizon(std::span<const double> history, std::size_t steps,
                                                   double dt) const {
    if (steps == 0) throw ValidationError("predict_horizon: steps must be positive");
    if (!(dt > 0.0)) throw ValidationError("predict_horizon: dt must be positive");
    const double stride = config_.stride;
    const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(steps) * dt / stride - 1e-9));
    std::vector<double> h(history.begin(), history.end());
    const std::size_t origin = h.size() - 1;
    for (std::size_t i = 0; i < k; ++i) h.push_back(predict_one_step(h).v_next);
    std::vector<double> out(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        const double s = static_cast<double>(j + 1) * dt / stride;
        auto lo = static_cast<std::size_t>(std::floor(s));
        if (lo >= k) lo = k - 1;
        const double frac = s - static_cast<double>(lo);
        out[j] = h[origin + lo] + frac * (h[origin + lo + 1] - h[origin + lo]);
    }
    return out;
}

std::vector<double> VelocityModel::predict_horizon(double v_k, double a_k, std::size_t steps, double dt) const {
    return predict_horizon(synth_history(v_k, a_k), steps, dt);
}

void VelocityModel::save(const std::filesystem::path& path) const {
    nlohmann::json header{{"version", kVersion},
                          {"endianness", "little"},
                          {"kind", "deep_forest"},
                          {"config", config_.to_json()},
                          {"depth", cascade_.depth()},
                          {"cv_errors", cascade_.cv_errors()}};
    ByteWriter w;
    cascade_.save(w);
    write_container(path, kMagic, std::move(header), w.bytes());
}

VelocityModel VelocityModel::load(const std::filesystem::path& path) {
    const auto c = read_container(path, kMagic);
    if (c.header.value("version", 0) != kVersion)
        throw ParseError(path.string() + ": unsupported velocity model version");
    VelocityModel m;
    m.config_ = VelocityModelConfig::from_json(c.header.at("config"));
    ByteReader r(c.payload);
    m.cascade_ = CascadeForest::load(r, m.config_.cascade);
    if (!r.done()) throw ParseError(path.string() + ": trailing bytes in velocity model");
    return m;
}

Metrics metrics(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.empty() || predicted.size() != actual.size())
        throw ShapeError("metrics: need equal non-empty lengths, got " + std::to_string(predicted.size()) + " and " +
                         std::to_string(actual.size()));
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - actual[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    const auto n = static_cast<double>(predicted.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

Metrics evaluate_horizon(const VelocityModel& model, std::span<const double> v, std::size_t horizon) {
    const std::size_t lag = model.lag();
    std::vector<double> pred, actual;
    for (std::size_t k = lag; k + horizon < v.size(); ++k) {
        const auto seq = model.predict_horizon(v.subspan(k - lag, lag + 1), horizon, model.stride());
        pred.push_back(seq.back());
        actual.push_back(v[k + horizon]);
    }
    return metrics(pred, actual);
}

Metrics persistence_horizon(std::span<const double> v, std::size_t lag, std::size_t horizon) {
    std::vector<double> pred, actual;
    for (std::size_t k = lag; k + horizon < v.size(); ++k) {
        pred.push_back(v[k]);
        actual.push_back(v[k + horizon]);
    }
    return metrics(pred, actual);
}

std::vector<double> to_demand_power(std::span<const double> v_seq, double dt, double v_prev,
                                    const powertrain::VehicleParams& params, double motor_eff) {
    std::vector<double> out(v_seq.size());
    double prev = v_prev;
    for (std::size_t i = 0; i < v_seq.size(); ++i) {
        out[i] = powertrain::demand_power(v_seq[i], (v_seq[i] - prev) / dt, params, motor_eff);
        prev = v_seq[i];
    }
    return out;
}

std::vector<double> to_demand_power(std::span<const double> v_seq, double dt, double v_prev,
                                    const powertrain::Powertrain& plant) {
    std::vector<double> out(v_seq.size());
    double prev = v_prev;
    for (std::size_t i = 0; i < v_seq.size(); ++i) {
        out[i] = plant.electrical_demand(v_seq[i], (v_seq[i] - prev) / dt).p_load;
        prev = v_seq[i];
    }
    return out;
}

std::vector<double> read_velocity_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path, {"t_s", "v_mps"});
    std::vector<double> v;
    v.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double ts = t.rows[i][0], vel = t.rows[i][1];
        if (i > 0 && std::abs(ts - t.rows[i - 1][0] - 1.0) > 1e-6)
            throw ParseError(path.string() + ": row " + std::to_string(i + 2) + ": samples must be 1 s apart", i + 2);
        if (!std::isfinite(vel) || vel < 0.0)
            throw ParseError(path.string() + ": row " + std::to_string(i + 2) + ": velocity must be finite and >= 0",
                             i + 2);
        v.push_back(vel);
    }
    return v;
}

void write_velocity_csv(const std::filesystem::path& path, std::span<const double> v, double stride) {
    std::string text = "t_s,v_mps\n";
    for (std::size_t i = 0; i < v.size(); ++i)
        text += csv::fmt(static_cast<double>(i) * stride) + "," + csv::fmt(v[i]) + "\n";
    csv::write_text(path, text);
}

}  // namespace fcev::velocity
