#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcev/common/container.hpp"
#include "fcev/learning/ensemble.hpp"

namespace fcev::velocity {

/// Multi-grained scanning: a window of `window` dimensions slides over an
/// m-dimensional raw vector and each sub-vector goes through one completely
/// random forest and one random forest, each emitting `outputs_per_window` values.
struct MgspConfig {
    std::size_t feature_dim = 10;  // m
    std::size_t window = 4;        // n
    std::size_t outputs_per_window = 1;  // p
    std::size_t trees_per_forest = 100;

    std::size_t windows() const { return feature_dim - window + 1; }
    std::size_t output_length() const { return 2 * outputs_per_window * windows(); }
    void validate() const;
};

struct CascadeConfig {
    MgspConfig mgsp;
    std::size_t max_layers = 20;
    std::size_t trees_per_forest = 100;
    std::size_t cv_folds = 3;
    double improvement = 0.01;  // relative CV error drop required to keep a layer
    std::size_t min_leaf = 3;
    std::size_t max_bins = 256;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static CascadeConfig from_json(const nlohmann::json& j);
};

/// With p > 1 each forest's trees are dealt round-robin into p groups and the
/// group means form the p outputs.
std::vector<double> forest_outputs(const learning::Forest& forest, std::span<const double> x, std::size_t p);

class MgspScanner {
public:
    MgspScanner() = default;
    MgspScanner(MgspConfig config, learning::Forest completely_random, learning::Forest random);

    /// Trains both window forests on every window of every row of `raw`.
    /// When `oof_folds` > 1 the returned features for the training rows are
    /// out-of-fold; otherwise they are in-sample.
    static MgspScanner fit(const learning::Dataset& raw, const MgspConfig& config, std::size_t min_leaf,
                           std::size_t max_bins, std::uint64_t seed, std::size_t oof_folds,
                           std::vector<double>* train_features);

    /// Throws ShapeError when raw.size() != feature_dim.
    std::vector<double> transform(std::span<const double> raw) const;
    const MgspConfig& config() const { return config_; }

    void save(ByteWriter& out) const;
    static MgspScanner load(ByteReader& in, const MgspConfig& config);

private:
    MgspConfig config_;
    learning::Forest cr_;
    learning::Forest rf_;
};

/// Same computation as MgspScanner::transform with the forests passed in.
std::vector<double> mgs_transform(const MgspConfig& config, std::span<const double> raw,
                                  const learning::Forest& completely_random, const learning::Forest& random);

struct CascadeLayer {
    // Two completely random forests then two random forests.
    std::array<learning::Forest, 4> forests;
};

/// Deep forest regressor: MGSP features feed a stack of four-forest layers,
/// each seeing the scanned features plus the previous layer's four outputs.
/// Layers are added while the k-fold error of the layer mean keeps improving.
class CascadeForest {
public:
    static CascadeForest train(const learning::Dataset& raw, const CascadeConfig& config);

    double predict(std::span<const double> raw) const;
    std::size_t depth() const { return layers_.size(); }
    /// Out-of-fold RMSE after each trained layer, including a rejected last one.
    const std::vector<double>& cv_errors() const { return cv_errors_; }
    const CascadeConfig& config() const { return config_; }

    void save(ByteWriter& out) const;
    static CascadeForest load(ByteReader& in, const CascadeConfig& config);

private:
    CascadeConfig config_;
    MgspScanner scanner_;
    std::vector<CascadeLayer> layers_;
    std::vector<double> cv_errors_;
};

/// Deterministic fold label per row.
std::vector<std::uint32_t> fold_labels(std::size_t rows, std::size_t folds, std::uint64_t seed);

}  // namespace fcev::velocity
