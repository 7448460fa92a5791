#include "propinfer/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "propinfer/errors.hpp"

namespace propinfer {

using nlohmann::json;

double RegressionTree::predict(const Eigen::VectorXd& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double subset_mean(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    double s = 0.0;
    for (int i : idx) s += v[i];
    return s / static_cast<double>(idx.size());
}

// Greedy exact search: SSE reduction over midpoint thresholds between
// consecutive distinct feature values. Ties keep the earliest candidate
// (lowest feature index, then lowest threshold) by iteration order.
Split best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
                 const std::vector<int>& idx, int min_leaf) {
    Split best;
    auto n = static_cast<std::size_t>(idx.size());
    if (n < 2 * static_cast<std::size_t>(min_leaf)) return best;

    double total_sum = 0.0, total_sq = 0.0;
    for (int i : idx) {
        total_sum += resid[i];
        total_sq += resid[i] * resid[i];
    }
    double parent_sse = total_sq - total_sum * total_sum / static_cast<double>(n);

    std::vector<int> order(idx);
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return X(a, f) < X(b, f); });
        double left_sum = 0.0, left_sq = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            double r = resid[order[k]];
            left_sum += r;
            left_sq += r * r;
            std::size_t left_n = k + 1;
            if (left_n < static_cast<std::size_t>(min_leaf)) continue;
            if (n - left_n < static_cast<std::size_t>(min_leaf)) break;
            double lo = X(order[k], f), hi = X(order[k + 1], f);
            if (lo == hi) continue;
            double right_sum = total_sum - left_sum;
            double right_sq = total_sq - left_sq;
            double sse = left_sq - left_sum * left_sum / static_cast<double>(left_n) +
                         right_sq - right_sum * right_sum / static_cast<double>(n - left_n);
            double gain = parent_sse - sse;
            if (gain > best.gain) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = lo + (hi - lo) / 2.0;
                best.gain = gain;
            }
        }
    }
    return best;
}

int grow(RegressionTree& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
         const std::vector<int>& idx, int depth, const GbtParams& params) {
    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().value = subset_mean(resid, idx);
    if (depth >= params.max_depth) return node_id;

    Split split = best_split(X, resid, idx, params.min_leaf);
    if (!split.found) return node_id;

    std::vector<int> left_idx, right_idx;
    for (int i : idx)
        (X(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);

    tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    int left = grow(tree, X, resid, left_idx, depth + 1, params);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    int right = grow(tree, X, resid, right_idx, depth + 1, params);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
}

}  // namespace

MetaRegressor MetaRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const GbtParams& params) {
    if (X.rows() != y.size())
        throw DimensionMismatch(static_cast<std::size_t>(X.rows()),
                                static_cast<std::size_t>(y.size()));
    if (X.rows() < 2) throw DegenerateTraining();
    if (X.cols() < 1) throw Error("fit: need at least one feature");

    MetaRegressor model;
    model.params_ = params;
    model.feature_dim_ = X.cols();
    model.base_ = y.mean();

    Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), model.base_);
    std::vector<int> all(static_cast<std::size_t>(X.rows()));
    std::iota(all.begin(), all.end(), 0);

    auto mse = [&] { return (y - pred).squaredNorm() / static_cast<double>(y.size()); };
    model.training_mse_.push_back(mse());

    for (int round = 0; round < params.n_rounds; ++round) {
        Eigen::VectorXd resid = y - pred;
        RegressionTree tree;
        grow(tree, X, resid, all, 0, params);
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            pred[i] += params.learning_rate * tree.predict(X.row(i));
        model.trees_.push_back(std::move(tree));
        model.training_mse_.push_back(mse());
    }
    return model;
}

double MetaRegressor::predict(const Eigen::VectorXd& x) const {
    if (x.size() != feature_dim_)
        throw DimensionMismatch(static_cast<std::size_t>(x.size()),
                                static_cast<std::size_t>(feature_dim_));
    double raw = base_;
    for (const auto& tree : trees_) raw += params_.learning_rate * tree.predict(x);
    return std::clamp(raw, 0.0, 1.0);
}

json MetaRegressor::to_json() const {
    json trees = json::array();
    for (const auto& tree : trees_) {
        json nodes = json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"v", n.value}});
        trees.push_back({{"nodes", nodes}});
    }
    return json{{"base", base_},
                {"lr", params_.learning_rate},
                {"feature_dim", feature_dim_},
                {"params",
                 {{"n_rounds", params_.n_rounds},
                  {"max_depth", params_.max_depth},
                  {"min_leaf", params_.min_leaf},
                  {"seed", params_.seed}}},
                {"trees", trees}};
}

MetaRegressor MetaRegressor::from_json(const json& j) {
    MetaRegressor model;
    model.base_ = j.at("base").get<double>();
    model.feature_dim_ = j.at("feature_dim").get<Eigen::Index>();
    model.params_.learning_rate = j.at("lr").get<double>();
    const auto& p = j.at("params");
    model.params_.n_rounds = p.at("n_rounds").get<int>();
    model.params_.max_depth = p.at("max_depth").get<int>();
    model.params_.min_leaf = p.at("min_leaf").get<int>();
    model.params_.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) {
        RegressionTree tree;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            n.feature = jn.at("f").get<int>();
            n.threshold = jn.at("t").get<double>();
            n.left = jn.at("l").get<int>();
            n.right = jn.at("r").get<int>();
            n.value = jn.at("v").get<double>();
            tree.nodes.push_back(n);
        }
        model.trees_.push_back(std::move(tree));
    }
    return model;
}

}  // namespace propinfer
