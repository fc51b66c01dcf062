#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcev/common/container.hpp"
#include "fcev/common/rng.hpp"

namespace fcev::learning {

/// Dense row-major design matrix with one regression target per row.
struct Dataset {
    std::size_t n_features = 0;
    std::vector<double> x;
    std::vector<double> y;

    std::size_t rows() const { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
    void push(std::span<const double> features, double target);
    /// Throws ValidationError on shape mismatch, empty data or non-finite values.
    void validate() const;
};

/// Quantile bins per feature. A value falls in bin b when edges[b-1] < x <= edges[b],
/// so "bin <= b" and "x <= edges[b]" select the same rows.
class BinnedMatrix {
public:
    BinnedMatrix(const Dataset& data, std::size_t max_bins = 256);

    std::size_t rows() const { return rows_; }
    std::size_t features() const { return edges_.size(); }
    std::uint16_t bin(std::size_t feature, std::size_t row) const { return bins_[feature * rows_ + row]; }
    std::size_t bin_count(std::size_t feature) const { return edges_[feature].size() + 1; }
    double edge(std::size_t feature, std::size_t b) const { return edges_[feature][b]; }

private:
    std::size_t rows_ = 0;
    std::vector<std::vector<double>> edges_;
    std::vector<std::uint16_t> bins_;  // feature-major
};

struct TreeParams {
    std::size_t max_depth = 0;     // 0 = unlimited
    std::size_t min_leaf = 1;
    std::size_t max_features = 0;  // features tried per split; 0 = all
    bool completely_random = false;
};

/// Binary regression tree; internal nodes route x[feature] <= threshold left.
class RegressionTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;
    };

    /// Grows a tree on `rows` (duplicates allowed, e.g. a bootstrap draw) fitting `targets`.
    static RegressionTree fit(const BinnedMatrix& bins, std::span<const double> targets,
                              std::vector<std::uint32_t> rows, const TreeParams& params, Rng& rng);

    double predict(std::span<const double> x) const;
    /// Prediction for a training row using its bins.
    double predict_binned(const BinnedMatrix& bins, std::size_t row) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t depth() const;
    const std::vector<Node>& nodes() const { return nodes_; }

    void save(ByteWriter& out) const;
    static RegressionTree load(ByteReader& in);

private:
    std::vector<Node> nodes_;
    std::vector<std::uint16_t> split_bins_;  // training-time only
};

}  // namespace fcev::learning
