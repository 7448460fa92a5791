#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace propinfer {

struct GbtParams {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_leaf = 2;
    std::uint64_t seed = 0;
};

/// Axis-aligned regression tree node. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // root at index 0
    double predict(const Eigen::VectorXd& x) const;
};

/// Gradient-boosted regression trees mapping feature vectors to ratios in
/// [0,1]. Squared-error boosting with exact greedy variance-reduction splits;
/// fully deterministic (no row/column subsampling). Split ties break by lowest
/// feature index, then lowest threshold.
class MetaRegressor {
public:
    static MetaRegressor fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const GbtParams& params);

    /// base + sum of shrunken tree outputs, clamped to [0,1].
    double predict(const Eigen::VectorXd& x) const;

    nlohmann::json to_json() const;
    static MetaRegressor from_json(const nlohmann::json& j);

    double base_prediction() const { return base_; }
    Eigen::Index feature_dim() const { return feature_dim_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    const GbtParams& params() const { return params_; }
    /// Training MSE after each boosting round (index 0 = base only).
    const std::vector<double>& training_mse() const { return training_mse_; }

private:
    double base_ = 0.0;
    Eigen::Index feature_dim_ = 0;
    std::vector<RegressionTree> trees_;
    GbtParams params_;
    std::vector<double> training_mse_;  // diagnostic, not serialized
};

}  // namespace propinfer
