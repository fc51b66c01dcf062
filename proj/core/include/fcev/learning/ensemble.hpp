#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcev/learning/tree.hpp"

namespace fcev::learning {

struct ForestParams {
    std::size_t n_trees = 100;
    TreeParams tree{0, 2, 0, false};
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// Bagged regression trees averaged at prediction time. Tree t draws its
/// randomness from mix_seed(seed, t), so the result does not depend on threading.
class Forest {
public:
    static Forest fit(const BinnedMatrix& bins, std::span<const double> targets, std::span<const std::uint32_t> rows,
                      const ForestParams& params);

    double predict(std::span<const double> x) const;
    double predict_binned(const BinnedMatrix& bins, std::size_t row) const;
    std::size_t size() const { return trees_.size(); }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    void save(ByteWriter& out) const;
    static Forest load(ByteReader& in);

private:
    std::vector<RegressionTree> trees_;
};

struct BoostingParams {
    std::size_t rounds = 500;
    double learning_rate = 0.1;
    TreeParams tree{10, 1, 0, false};
    std::uint64_t seed = 0;
};

/// Squared-loss gradient boosting: F = base + rate * sum of trees fit to residuals.
class BoostedTrees {
public:
    static BoostedTrees fit(const BinnedMatrix& bins, std::span<const double> targets,
                            std::span<const std::uint32_t> rows, const BoostingParams& params);

    double predict(std::span<const double> x) const;
    std::size_t size() const { return trees_.size(); }

    void save(ByteWriter& out) const;
    static BoostedTrees load(ByteReader& in);

private:
    double base_ = 0.0;
    double rate_ = 0.1;
    std::vector<RegressionTree> trees_;
};

std::vector<std::uint32_t> all_rows(std::size_t n);

}  // namespace fcev::learning
