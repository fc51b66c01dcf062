#include "fcev/learning/ensemble.hpp"

#include <numeric>

#include "fcev/common/error.hpp"
#include "fcev/common/parallel.hpp"

namespace fcev::learning {

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
}

Forest Forest::fit(const BinnedMatrix& bins, std::span<const double> targets, std::span<const std::uint32_t> rows,
                   const ForestParams& params) {
    if (params.n_trees == 0) throw ValidationError("forest needs at least one tree");
    if (rows.empty()) throw ValidationError("forest training set is empty");
    Forest forest;
    forest.trees_.resize(params.n_trees);
    parallel_for(params.n_trees, [&](std::size_t t) {
        Rng rng(mix_seed(params.seed, t));
        std::vector<std::uint32_t> sample(rows.begin(), rows.end());
        if (params.bootstrap) {
            for (auto& r : sample) r = rows[rng.index(rows.size())];
        }
        forest.trees_[t] = RegressionTree::fit(bins, targets, std::move(sample), params.tree, rng);
    });
    return forest;
}

double Forest::predict(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(x);
    return s / static_cast<double>(trees_.size());
}

double Forest::predict_binned(const BinnedMatrix& bins, std::size_t row) const {
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict_binned(bins, row);
    return s / static_cast<double>(trees_.size());
}

void Forest::save(ByteWriter& out) const {
    out.u64(trees_.size());
    for (const auto& t : trees_) t.save(out);
}

Forest Forest::load(ByteReader& in) {
    Forest f;
    const auto n = in.u64();
    if (n == 0 || n > 1'000'000) throw ParseError("forest tree count out of range");
    f.trees_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) f.trees_.push_back(RegressionTree::load(in));
    return f;
}

BoostedTrees BoostedTrees::fit(const BinnedMatrix& bins, std::span<const double> targets,
                               std::span<const std::uint32_t> rows, const BoostingParams& params) {
    if (params.rounds == 0) throw ValidationError("boosting needs at least one round");
    if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
        throw ValidationError("learning rate must lie in (0, 1]");
    }
    if (rows.empty()) throw ValidationError("boosting training set is empty");
    BoostedTrees model;
    model.rate_ = params.learning_rate;
    double mean = 0.0;
    for (auto r : rows) mean += targets[r];
    mean /= static_cast<double>(rows.size());
    model.base_ = mean;

    std::vector<double> fitted(targets.size(), mean);
    std::vector<double> residual(targets.size(), 0.0);
    Rng rng(mix_seed(params.seed, 0));
    model.trees_.reserve(params.rounds);
    for (std::size_t round = 0; round < params.rounds; ++round) {
        for (auto r : rows) residual[r] = targets[r] - fitted[r];
        auto tree = RegressionTree::fit(bins, residual, std::vector<std::uint32_t>(rows.begin(), rows.end()),
                                        params.tree, rng);
        for (auto r : rows) fitted[r] += model.rate_ * tree.predict_binned(bins, r);
        model.trees_.push_back(std::move(tree));
    }
    return model;
}

double BoostedTrees::predict(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees_) s += t.predict(x);
    return base_ + rate_ * s;
}

void BoostedTrees::save(ByteWriter& out) const {
    out.f64(base_);
    out.f64(rate_);
    out.u64(trees_.size());
    for (const auto& t : trees_) t.save(out);
}

BoostedTrees BoostedTrees::load(ByteReader& in) {
    BoostedTrees b;
    b.base_ = in.f64();
    b.rate_ = in.f64();
    const auto n = in.u64();
    if (n == 0 || n > 1'000'000) throw ParseError("boosting round count out of range");
    b.trees_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) b.trees_.push_back(RegressionTree::load(in));
    return b;
}

}  // namespace fcev::learning
