#include "fcev/velocity/deep_forest.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fcev/common/error.hpp"
#include "fcev/common/rng.hpp"

namespace fcev::velocity {

using learning::BinnedMatrix;
using learning::Dataset;
using learning::Forest;
using learning::ForestParams;

void MgspConfig::validate() const {
    if (feature_dim == 0 || window == 0 || window > feature_dim)
        throw ValidationError("mgsp: need 1 <= window <= feature_dim, got window " + std::to_string(window) +
                              " and feature_dim " + std::to_string(feature_dim));
    if (outputs_per_window == 0) throw ValidationError("mgsp: outputs_per_window must be positive");
    if (trees_per_forest < outputs_per_window)
        throw ValidationError("mgsp: trees_per_forest must be at least outputs_per_window");
}

void CascadeConfig::validate() const {
    mgsp.validate();
    if (max_layers == 0) throw ValidationError("cascade: max_layers must be positive");
    if (trees_per_forest == 0) throw ValidationError("cascade: trees_per_forest must be positive");
    if (cv_folds < 2) throw ValidationError("cascade: cv_folds must be at least 2");
    if (!(improvement >= 0.0) || improvement >= 1.0) throw ValidationError("cascade: improvement must be in [0, 1)");
    if (min_leaf == 0) throw ValidationError("cascade: min_leaf must be positive");
    if (max_bins < 2 || max_bins > 65536) throw ValidationError("cascade: max_bins must be in [2, 65536]");
}

nlohmann::json CascadeConfig::to_json() const {
    return {{"feature_dim", mgsp.feature_dim},
            {"window", mgsp.window},
            {"outputs_per_window", mgsp.outputs_per_window},
            {"scan_trees", mgsp.trees_per_forest},
            {"max_layers", max_layers},
            {"trees_per_forest", trees_per_forest},
            {"cv_folds", cv_folds},
            {"improvement", improvement},
            {"min_leaf", min_leaf},
            {"max_bins", max_bins},
            {"seed", seed}};
}

CascadeConfig CascadeConfig::from_json(const nlohmann::json& j) {
    CascadeConfig c;
    c.mgsp.feature_dim = j.value("feature_dim", c.mgsp.feature_dim);
    c.mgsp.window = j.value("window", c.mgsp.window);
    c.mgsp.outputs_per_window = j.value("outputs_per_window", c.mgsp.outputs_per_window);
    c.mgsp.trees_per_forest = j.value("scan_trees", c.mgsp.trees_per_forest);
    c.max_layers = j.value("max_layers", c.max_layers);
    c.trees_per_forest = j.value("trees_per_forest", c.trees_per_forest);
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.improvement = j.value("improvement", c.improvement);
    c.min_leaf = j.value("min_leaf", c.min_leaf);
    c.max_bins = j.value("max_bins", c.max_bins);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

std::vector<std::uint32_t> fold_labels(std::size_t rows, std::size_t folds, std::uint64_t seed) {
    std::vector<std::uint32_t> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) labels[i] = static_cast<std::uint32_t>(i % folds);
    Rng rng(seed);
    for (std::size_t i = rows; i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
    return labels;
}

namespace {

std::size_t sqrt_features(std::size_t d) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))));
}

ForestParams forest_params(std::size_t trees, std::size_t min_leaf, bool completely_random, std::size_t d,
                           std::uint64_t seed) {
    ForestParams fp;
    fp.n_trees = trees;
    fp.tree.max_depth = 0;
    fp.tree.min_leaf = min_leaf;
    fp.tree.completely_random = completely_random;
    fp.tree.max_features = completely_random ? 0 : sqrt_features(d);
    fp.bootstrap = !completely_random;
    fp.seed = seed;
    return fp;
}

void group_means(const Forest& forest, std::size_t p, double* out, auto&& tree_value) {
    const auto& trees = forest.trees();
    for (std::size_t g = 0; g < p; ++g) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t t = g; t < trees.size(); t += p, ++count) sum += tree_value(trees[t]);
        out[g] = sum / static_cast<double>(count);
    }
}

// Trains `params` on rows outside each fold and predicts the fold; `group` maps a
// dataset row to its fold owner. Returns p outputs per dataset row.
std::vector<double> out_of_fold(const BinnedMatrix& bins, std::span<const double> targets,
                                std::span<const std::uint32_t> fold_of_row, std::size_t folds,
                                const ForestParams& params, std::size_t p) {
    std::vector<double> out(bins.rows() * p);
    for (std::size_t q = 0; q < folds; ++q) {
        std::vector<std::uint32_t> train, test;
        for (std::size_t r = 0; r < bins.rows(); ++r)
            (fold_of_row[r] == q ? test : train).push_back(static_cast<std::uint32_t>(r));
        if (test.empty()) continue;
        ForestParams fp = params;
        fp.seed = mix_seed(params.seed, 7919 + q);
        const Forest f = Forest::fit(bins, targets, train, fp);
        for (auto r : test)
            group_means(f, p, out.data() + r * p, [&](const auto& tree) { return tree.predict_binned(bins, r); });
    }
    return out;
}

}  // namespace

std::vector<double> forest_outputs(const Forest& forest, std::span<const double> x, std::size_t p) {
    std::vector<double> out(p);
    group_means(forest, p, out.data(), [&](const auto& tree) { return tree.predict(x); });
    return out;
}

std::vector<double> mgs_transform(const MgspConfig& config, std::span<const double> raw, const Forest& completely_random,
                                  const Forest& random) {
    if (raw.size() != config.feature_dim)
        throw ShapeError("mgsp: expected " + std::to_string(config.feature_dim) + " features, got " +
                         std::to_string(raw.size()));
    const std::size_t p = config.outputs_per_window;
    std::vector<double> out;
    out.reserve(config.output_length());
    for (std::size_t w = 0; w < config.windows(); ++w) {
        const auto sub = raw.subspan(w, config.window);
        for (const Forest* f : {&completely_random, &random}) {
            const auto o = forest_outputs(*f, sub, p);
            out.insert(out.end(), o.begin(), o.end());
        }
    }
    return out;
}

MgspScanner::MgspScanner(MgspConfig config, Forest completely_random, Forest random)
    : config_(config), cr_(std::move(completely_random)), rf_(std::move(random)) {
    config_.validate();
}

MgspScanner MgspScanner::fit(const Dataset& raw, const MgspConfig& config, std::size_t min_leaf, std::size_t max_bins,
                             std::uint64_t seed, std::size_t oof_folds, std::vector<double>* train_features) {
    config.validate();
    raw.validate();
    if (raw.n_features != config.feature_dim)
        throw ShapeError("mgsp: dataset has " + std::to_string(raw.n_features) + " features, config expects " +
                         std::to_string(config.feature_dim));
    const std::size_t rows = raw.rows(), windows = config.windows(), p = config.outputs_per_window;

    Dataset inst;
    inst.n_features = config.window;
    inst.x.reserve(rows * windows * config.window);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t w = 0; w < windows; ++w) inst.push(raw.row(r).subspan(w, config.window), raw.y[r]);
    const BinnedMatrix bins(inst, max_bins);

    const auto cr_params = forest_params(config.trees_per_forest, min_leaf, true, config.window, mix_seed(seed, 1));
    const auto rf_params = forest_params(config.trees_per_forest, min_leaf, false, config.window, mix_seed(seed, 2));
    const auto all = learning::all_rows(inst.rows());
    MgspScanner scanner(config, Forest::fit(bins, inst.y, all, cr_params), Forest::fit(bins, inst.y, all, rf_params));

    if (train_features) {
        train_features->assign(rows * config.output_length(), 0.0);
        if (oof_folds > 1) {
            const auto sample_fold = fold_labels(rows, oof_folds, mix_seed(seed, 3));
            std::vector<std::uint32_t> inst_fold(inst.rows());
            for (std::size_t i = 0; i < inst.rows(); ++i) inst_fold[i] = sample_fold[i / windows];
            const auto cr = out_of_fold(bins, inst.y, inst_fold, oof_folds, cr_params, p);
            const auto rf = out_of_fold(bins, inst.y, inst_fold, oof_folds, rf_params, p);
            for (std::size_t i = 0; i < inst.rows(); ++i) {
                double* dst = train_features->data() + i * 2 * p;  // row r, window w lands at (r*windows+w)*2p
                std::copy_n(cr.data() + i * p, p, dst);
                std::copy_n(rf.data() + i * p, p, dst + p);
            }
        } else {
            for (std::size_t r = 0; r < rows; ++r) {
                const auto f = scanner.transform(raw.row(r));
                std::copy(f.begin(), f.end(), train_features->begin() + static_cast<std::ptrdiff_t>(r * f.size()));
            }
        }
    }
    return scanner;
}

std::vector<double> MgspScanner::transform(std::span<const double> raw) const {
    return mgs_transform(config_, raw, cr_, rf_);
}

void MgspScanner::save(ByteWriter& out) const {
    cr_.save(out);
    rf_.save(out);
}

MgspScanner MgspScanner::load(ByteReader& in, const MgspConfig& config) {
    auto cr = Forest::load(in);
    auto rf = Forest::load(in);
    return MgspScanner(config, std::move(cr), std::move(rf));
}

CascadeForest CascadeForest::train(const Dataset& raw, const CascadeConfig& config) {
    config.validate();
    raw.validate();
    if (raw.n_features != config.mgsp.feature_dim)
        throw ShapeError("cascade: dataset has " + std::to_string(raw.n_features) + " features, config expects " +
                         std::to_string(config.mgsp.feature_dim));
    const std::size_t rows = raw.rows();
    if (rows < config.cv_folds)
        throw ValidationError("cascade: need at least " + std::to_string(config.cv_folds) + " samples, got " +
                              std::to_string(rows));

    CascadeForest model;
    model.config_ = config;
    std::vector<double> scanned;
    model.scanner_ = MgspScanner::fit(raw, config.mgsp, config.min_leaf, config.max_bins, mix_seed(config.seed, 1000),
                                      config.cv_folds, &scanned);
    const std::size_t s = config.mgsp.output_length();
    const auto folds = fold_labels(rows, config.cv_folds, mix_seed(config.seed, 2000));

    std::vector<double> augmented;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < config.max_layers; ++l) {
        Dataset d;
        d.n_features = s + (l > 0 ? 4 : 0);
        d.x.reserve(rows * d.n_features);
        for (std::size_t r = 0; r < rows; ++r) {
            d.x.insert(d.x.end(), scanned.begin() + static_cast<std::ptrdiff_t>(r * s),
                       scanned.begin() + static_cast<std::ptrdiff_t>((r + 1) * s));
            if (l > 0)
                d.x.insert(d.x.end(), augmented.begin() + static_cast<std::ptrdiff_t>(r * 4),
                           augmented.begin() + static_cast<std::ptrdiff_t>(r * 4 + 4));
        }
        d.y = raw.y;
        const BinnedMatrix bins(d, config.max_bins);
        const auto all = learning::all_rows(rows);

        CascadeLayer layer;
        std::vector<double> next(rows * 4);
        for (std::size_t f = 0; f < 4; ++f) {
            const auto fp = forest_params(config.trees_per_forest, config.min_leaf, f < 2, d.n_features,
                                          mix_seed(config.seed, 100 * (l + 1) + f));
            const auto oof = out_of_fold(bins, d.y, folds, config.cv_folds, fp, 1);
            for (std::size_t r = 0; r < rows; ++r) next[r * 4 + f] = oof[r];
            layer.forests[f] = Forest::fit(bins, d.y, all, fp);
        }
        double sq = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double mean = 0.25 * (next[r * 4] + next[r * 4 + 1] + next[r * 4 + 2] + next[r * 4 + 3]);
            sq += (mean - raw.y[r]) * (mean - raw.y[r]);
        }
        const double err = std::sqrt(sq / static_cast<double>(rows));
        model.cv_errors_.push_back(err);
        if (l > 0 && !(err < best * (1.0 - config.improvement))) break;
        model.layers_.push_back(std::move(layer));
        best = err;
        augmented = std::move(next);
    }
    return model;
}

double CascadeForest::predict(std::span<const double> raw) const {
    const auto scanned = scanner_.transform(raw);
    std::vector<double> x(scanned);
    std::array<double, 4> out{};
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (l > 0) {
            x.resize(scanned.size());
            x.insert(x.end(), out.begin(), out.end());
        }
        for (std::size_t f = 0; f < 4; ++f) out[f] = layers_[l].forests[f].predict(x);
    }
    return 0.25 * (out[0] + out[1] + out[2] + out[3]);
}

void CascadeForest::save(ByteWriter& out) const {
    scanner_.save(out);
    out.u64(layers_.size());
    for (const auto& layer : layers_)
        for (const auto& f : layer.forests) f.save(out);
    out.u64(cv_errors_.size());
    out.f64s(cv_errors_);
}

CascadeForest CascadeForest::load(ByteReader& in, const CascadeConfig& config) {
    config.validate();
    CascadeForest model;
    model.config_ = config;
    model.scanner_ = MgspScanner::load(in, config.mgsp);
    const auto n = in.u64();
    if (n == 0 || n > config.max_layers) throw ParseError("cascade: layer count " + std::to_string(n) + " out of range");
    model.layers_.resize(n);
    for (auto& layer : model.layers_)
        for (auto& f : layer.forests) f = Forest::load(in);
    const auto e = in.u64();
    if (e > config.max_layers) throw ParseError("cascade: cv error count out of range");
    model.cv_errors_ = in.f64s(e);
    return model;
}

}  // namespace fcev::velocity
