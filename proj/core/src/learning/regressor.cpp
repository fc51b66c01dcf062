#include "fcev/learning/regressor.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "fcev/common/container.hpp"
#include "fcev/common/error.hpp"
#include "fcev/learning/ensemble.hpp"

namespace fcev::learning {

namespace {

constexpr std::string_view kMagic = "FCEVREG1";

class ForestRegressor final : public Regressor {
public:
    explicit ForestRegressor(Forest f) : forest_(std::move(f)) {}
    double predict(std::span<const double> x) const override { return forest_.predict(x); }
    void save(ByteWriter& out) const override { forest_.save(out); }

private:
    Forest forest_;
};

class BoostedRegressor final : public Regressor {
public:
    explicit BoostedRegressor(BoostedTrees b) : model_(std::move(b)) {}
    double predict(std::span<const double> x) const override { return model_.predict(x); }
    void save(ByteWriter& out) const override { model_.save(out); }

private:
    BoostedTrees model_;
};

struct Entry {
    RegressorFactory factory;
    RegressorLoader loader;
};

std::map<std::string, Entry>& registry() {
    static std::map<std::string, Entry> r = [] {
        std::map<std::string, Entry> m;
        m["random_forest"] = {
            [](const RegressorSpec& s, const Dataset& d) -> std::unique_ptr<Regressor> {
                BinnedMatrix bins(d, s.max_bins);
                ForestParams p;
                p.n_trees = s.n_trees;
                p.tree = {s.max_depth, s.min_leaf, s.max_features, false};
                p.seed = s.seed;
                return std::make_unique<ForestRegressor>(Forest::fit(bins, d.y, all_rows(d.rows()), p));
            },
            [](ByteReader& in) -> std::unique_ptr<Regressor> {
                return std::make_unique<ForestRegressor>(Forest::load(in));
            }};
        m["gradient_boosted_trees"] = {
            [](const RegressorSpec& s, const Dataset& d) -> std::unique_ptr<Regressor> {
                BinnedMatrix bins(d, s.max_bins);
                BoostingParams p;
                p.rounds = s.rounds;
                p.learning_rate = s.learning_rate;
                p.tree = {s.boost_depth, s.min_leaf, s.max_features, false};
                p.seed = s.seed;
                return std::make_unique<BoostedRegressor>(BoostedTrees::fit(bins, d.y, all_rows(d.rows()), p));
            },
            [](ByteReader& in) -> std::unique_ptr<Regressor> {
                return std::make_unique<BoostedRegressor>(BoostedTrees::load(in));
            }};
        return m;
    }();
    return r;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

Entry lookup(const std::string& kind) {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(kind);
    if (it == registry().end()) throw ValidationError("unknown regressor kind '" + kind + "'");
    return it->second;
}

}  // namespace

void RegressorSpec::validate() const {
    if (kind.empty()) throw ValidationError("regressor kind is empty");
    if (n_trees == 0) throw ValidationError("n_trees must be positive");
    if (min_leaf == 0) throw ValidationError("min_leaf must be positive");
    if (rounds == 0) throw ValidationError("rounds must be positive");
    if (boost_depth == 0) throw ValidationError("boost_depth must be positive");
    if (max_bins < 2) throw ValidationError("max_bins must be at least 2");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning_rate must lie in (0, 1]");
}

nlohmann::json RegressorSpec::to_json() const {
    nlohmann::json j{{"kind", kind},         {"n_trees", n_trees},     {"max_depth", max_depth},
                     {"min_leaf", min_leaf}, {"max_features", max_features}, {"rounds", rounds},
                     {"learning_rate", learning_rate}, {"boost_depth", boost_depth}, {"max_bins", max_bins},
                     {"seed", seed}};
    if (!plugin.is_null()) j["plugin"] = plugin;
    return j;
}

RegressorSpec RegressorSpec::from_json(const nlohmann::json& j) {
    RegressorSpec s;
    try {
        s.kind = j.value("kind", s.kind);
        s.n_trees = j.value("n_trees", s.n_trees);
        s.max_depth = j.value("max_depth", s.max_depth);
        s.min_leaf = j.value("min_leaf", s.min_leaf);
        s.max_features = j.value("max_features", s.max_features);
        s.rounds = j.value("rounds", s.rounds);
        s.learning_rate = j.value("learning_rate", s.learning_rate);
        s.boost_depth = j.value("boost_depth", s.boost_depth);
        s.max_bins = j.value("max_bins", s.max_bins);
        s.seed = j.value("seed", s.seed);
        if (j.contains("plugin")) s.plugin = j.at("plugin");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("regressor spec: ") + e.what());
    }
    s.validate();
    return s;
}

void register_regressor(const std::string& kind, RegressorFactory factory, RegressorLoader loader) {
    std::lock_guard lock(registry_mutex());
    registry()[kind] = {std::move(factory), std::move(loader)};
}

bool has_regressor(const std::string& kind) {
    std::lock_guard lock(registry_mutex());
    return registry().count(kind) != 0;
}

std::string dataset_digest(const Dataset& data) {
    std::vector<double> all(data.x);
    all.insert(all.end(), data.y.begin(), data.y.end());
    return digest_doubles(all);
}

TrainedRegressor train_regressor(const RegressorSpec& spec, const Dataset& data) {
    spec.validate();
    data.validate();
    if (data.rows() < spec.min_leaf) throw ValidationError("training set smaller than min_leaf");
    const auto entry = lookup(spec.kind);
    TrainedRegressor out;
    out.model = entry.factory(spec, data);
    out.spec = spec;
    out.n_features = data.n_features;
    out.data_digest = dataset_digest(data);
    out.train_rmse = rmse(out, data);
    return out;
}

double rmse(const TrainedRegressor& r, const Dataset& data) {
    if (data.rows() == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double e = r.predict(data.row(i)) - data.y[i];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(data.rows()));
}

void save_regressor(const std::filesystem::path& path, const TrainedRegressor& r) {
    ByteWriter w;
    r.model->save(w);
    nlohmann::json header{{"kind", "regressor"},
                          {"spec", r.spec.to_json()},
                          {"n_features", r.n_features},
                          {"data_digest", r.data_digest},
                          {"train_rmse", r.train_rmse}};
    write_container(path, kMagic, header, w.bytes());
}

TrainedRegressor load_regressor(const std::filesystem::path& path) {
    auto c = read_container(path, kMagic);
    TrainedRegressor r;
    try {
        r.spec = RegressorSpec::from_json(c.header.at("spec"));
        r.n_features = c.header.at("n_features").get<std::size_t>();
        r.data_digest = c.header.at("data_digest").get<std::string>();
        r.train_rmse = c.header.at("train_rmse").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad regressor header: " + e.what());
    }
    ByteReader in(c.payload);
    r.model = lookup(r.spec.kind).loader(in);
    if (!in.done()) throw ParseError(path.string() + ": trailing bytes after regressor payload");
    return r;
}

}  // namespace fcev::learning
