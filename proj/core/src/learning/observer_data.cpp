#include "fcev/learning/observer_data.hpp"

#include <numeric>
#include <string>

#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"
#include "fcev/common/rng.hpp"

namespace fcev::learning {

namespace {

const std::vector<std::string>& csv_header() {
    static const std::vector<std::string> h{"p_batt", "p_load", "u_batt", "r_batt", "p_fc", "delta_soc"};
    return h;
}

}  // namespace

std::vector<ObserverSample> generate_training_set(std::span<const StepRecord> log) {
    if (log.size() < 2) throw ValidationError("log needs at least two steps to form a training sample");
    std::vector<ObserverSample> out;
    out.reserve(log.size() - 1);
    for (std::size_t k = 0; k + 1 < log.size(); ++k) {
        const auto& r = log[k];
        if (r.soc_clamped) continue;
        out.push_back({r.p_batt, r.p_load, r.u_batt, r.r_batt, r.p_fc, log[k + 1].soc - r.soc});
    }
    return out;
}

Dataset to_dataset(std::span<const ObserverSample> samples) {
    Dataset d;
    d.n_features = kObserverFeatures.size();
    d.x.reserve(samples.size() * d.n_features);
    d.y.reserve(samples.size());
    for (const auto& s : samples) d.push(s.features(), s.delta_soc);
    return d;
}

std::pair<std::vector<ObserverSample>, std::vector<ObserverSample>> split_holdout(
    std::span<const ObserverSample> samples, double holdout, std::uint64_t seed) {
    if (!(holdout > 0.0 && holdout < 1.0)) throw ValidationError("holdout fraction must lie in (0, 1)");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x5b1d));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const auto n_test = static_cast<std::size_t>(holdout * static_cast<double>(samples.size()));
    std::pair<std::vector<ObserverSample>, std::vector<ObserverSample>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_test ? out.second : out.first).push_back(samples[order[i]]);
    }
    return out;
}

void write_training_csv(const std::filesystem::path& path, std::span<const ObserverSample> samples) {
    std::string text = "p_batt,p_load,u_batt,r_batt,p_fc,delta_soc\n";
    for (const auto& s : samples) {
        text += csv::fmt(s.p_batt) + ',' + csv::fmt(s.p_load) + ',' + csv::fmt(s.u_batt) + ',' + csv::fmt(s.r_batt) +
                ',' + csv::fmt(s.p_fc) + ',' + csv::fmt(s.delta_soc) + '\n';
    }
    csv::write_text(path, text);
}

std::vector<ObserverSample> read_training_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path, csv_header());
    std::vector<ObserverSample> out;
    out.reserve(table.rows.size());
    for (const auto& r : table.rows) out.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    return out;
}

}  // namespace fcev::learning
