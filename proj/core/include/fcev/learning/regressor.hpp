#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "fcev/learning/tree.hpp"

namespace fcev::learning {

struct RegressorSpec {
    std::string kind = "random_forest";  // random_forest | gradient_boosted_trees | registered plugin name
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;           // forests; 0 = grow until leaves are pure or minimal
    std::size_t min_leaf = 2;
    std::size_t max_features = 0;        // 0 = all features
    std::size_t rounds = 500;
    double learning_rate = 0.1;
    std::size_t boost_depth = 10;
    std::size_t max_bins = 256;
    std::uint64_t seed = 0;
    nlohmann::json plugin;               // free-form hyperparameters for plugins

    void validate() const;
    nlohmann::json to_json() const;
    static RegressorSpec from_json(const nlohmann::json& j);
};

class Regressor {
public:
    virtual ~Regressor() = default;
    virtual double predict(std::span<const double> features) const = 0;
    virtual void save(ByteWriter& out) const = 0;
};

struct TrainedRegressor {
    std::shared_ptr<const Regressor> model;
    RegressorSpec spec;
    std::size_t n_features = 0;
    std::string data_digest;
    double train_rmse = 0.0;

    double predict(std::span<const double> features) const { return model->predict(features); }
};

using RegressorFactory = std::function<std::unique_ptr<Regressor>(const RegressorSpec&, const Dataset&)>;
using RegressorLoader = std::function<std::unique_ptr<Regressor>(ByteReader&)>;

/// Makes a regressor kind available to train_regressor and load_regressor.
/// Re-registering a name replaces the previous entry.
void register_regressor(const std::string& kind, RegressorFactory factory, RegressorLoader loader);
bool has_regressor(const std::string& kind);

/// Throws ValidationError on an empty or non-finite training set or unknown kind.
TrainedRegressor train_regressor(const RegressorSpec& spec, const Dataset& data);

double rmse(const TrainedRegressor& r, const Dataset& data);
std::string dataset_digest(const Dataset& data);

void save_regressor(const std::filesystem::path& path, const TrainedRegressor& r);
TrainedRegressor load_regressor(const std::filesystem::path& path);

}  // namespace fcev::learning
