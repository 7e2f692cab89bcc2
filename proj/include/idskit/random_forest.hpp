#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "idskit/dataset.hpp"
#include "idskit/error.hpp"
#include "idskit/prediction.hpp"
#include "idskit/rng.hpp"

namespace idskit::baselines {

// Gini impurity 1 - sum(p_c^2) over class counts.
inline double gini(std::span<const std::int64_t> counts) {
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        if (c < 0) throw ContractError("gini: negative class count");
        total += c;
    }
    if (total == 0) throw ContractError("gini: all class counts are zero");
    double sum_sq = 0.0;
    for (std::int64_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

// feature < 0 marks a leaf. Internal nodes route x[feature] <= threshold to
// the left child.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int cls = 0;
    std::array<std::int64_t, 2> counts{};

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

inline int tree_predict(const DecisionTree& tree, std::span<const double> x) {
    int node = 0;
    while (!tree.nodes[node].is_leaf()) {
        const TreeNode& n = tree.nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[node].cls;
}

struct ForestConfig {
    int tree_count = 100;
    int min_samples_split = 2;
    int max_depth = 0;           // 0 = unlimited
    int features_per_split = 0;  // 0 = ceil(sqrt(feature count))

    void validate() const {
        if (tree_count < 1) throw ConfigError("forest: tree_count must be >= 1");
        if (min_samples_split < 2) throw ConfigError("forest: min_samples_split must be >= 2");
        if (max_depth < 0) throw ConfigError("forest: max_depth must be >= 0");
        if (features_per_split < 0) throw ConfigError("forest: features_per_split must be >= 0");
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    int feature_count = 0;
    int features_per_split = 0;
};

namespace detail {

struct TreeBuilder {
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;
    int mtry;
    int max_depth;
    int min_samples_split;
    Rng& rng;
    DecisionTree& tree;

    int build(std::vector<std::size_t>& idx, int depth) {
        std::array<std::int64_t, 2> counts{};
        for (std::size_t i : idx) ++counts[y[i]];
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].counts = counts;
        tree.nodes[node_id].cls = counts[1] > counts[0] ? 1 : 0;

        const bool pure = counts[0] == 0 || counts[1] == 0;
        const bool too_small = idx.size() < static_cast<std::size_t>(min_samples_split);
        const bool too_deep = max_depth > 0 && depth >= max_depth;
        if (pure || too_small || too_deep) return node_id;

        const double parent_gini = gini(counts);
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = parent_gini;

        // Candidate features: a fresh random subset of size mtry per node.
        std::vector<int> features(x[0].size());
        for (std::size_t f = 0; f < features.size(); ++f) features[f] = static_cast<int>(f);
        for (int pick = 0; pick < mtry; ++pick) {
            const std::size_t j =
                pick + static_cast<std::size_t>(rng.next_below(features.size() - pick));
            std::swap(features[pick], features[j]);
        }

        std::vector<std::pair<double, int>> sorted;
        sorted.reserve(idx.size());
        for (int pick = 0; pick < mtry; ++pick) {
            const int f = features[pick];
            sorted.clear();
            for (std::size_t i : idx) sorted.emplace_back(x[i][f], y[i]);
            std::sort(sorted.begin(), sorted.end());

            std::array<std::int64_t, 2> left{};
            const auto total = static_cast<double>(idx.size());
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                ++left[sorted[i].second];
                if (sorted[i].first == sorted[i + 1].first) continue;
                const std::array<std::int64_t, 2> right{counts[0] - left[0], counts[1] - left[1]};
                const double nl = static_cast<double>(i + 1);
                const double nr = total - nl;
                const double score = (nl * gini(left) + nr * gini(right)) / total;
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
                }
            }
        }
        if (best_feature < 0) return node_id;  // no split improves impurity

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx)
            (x[i][best_feature] <= best_threshold ? left_idx : right_idx).push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;

        idx.clear();
        idx.shrink_to_fit();
        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        const int left_id = build(left_idx, depth + 1);
        tree.nodes[node_id].left = left_id;
        const int right_id = build(right_idx, depth + 1);
        tree.nodes[node_id].right = right_id;
        return node_id;
    }
};

inline DecisionTree build_tree(const std::vector<std::vector<double>>& x,
                               const std::vector<int>& y, const ForestConfig& config, int mtry,
                               std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::size_t>(rng.next_below(n));

    DecisionTree tree;
    TreeBuilder builder{x, y, mtry, config.max_depth, config.min_samples_split, rng, tree};
    builder.build(idx, 0);
    return tree;
}

}  // namespace detail

// Bootstrap-aggregated Gini trees. Per-tree seeds are fixed up front as
// derive_seed(seed, "forest-tree", t), so concurrent construction cannot
// change the result.
inline RandomForest train_forest(const std::vector<std::vector<double>>& x,
                                 const std::vector<int>& y, const ForestConfig& config,
                                 std::uint64_t seed) {
    config.validate();
    if (x.empty()) throw ContractError("train_forest: empty dataset");
    if (x.size() != y.size()) throw ShapeError("train_forest: feature rows and label count differ");
    for (int label : y)
        if (label != 0 && label != 1) throw ContractError("train_forest: labels must be 0 or 1");

    RandomForest forest;
    forest.feature_count = static_cast<int>(x[0].size());
    forest.features_per_split =
        config.features_per_split > 0
            ? std::min(config.features_per_split, forest.feature_count)
            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(forest.feature_count))));
    forest.trees.resize(config.tree_count);

    std::vector<std::uint64_t> tree_seeds(config.tree_count);
    for (int t = 0; t < config.tree_count; ++t)
        tree_seeds[t] = derive_seed(seed, "forest-tree", static_cast<std::uint64_t>(t));

    const unsigned workers = std::min<unsigned>(
        std::max(1u, std::thread::hardware_concurrency()), static_cast<unsigned>(config.tree_count));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned w) {
        try {
            for (int t = static_cast<int>(w); t < config.tree_count; t += static_cast<int>(workers))
                forest.trees[t] =
                    detail::build_tree(x, y, config, forest.features_per_split, tree_seeds[t]);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
        for (auto& th : threads) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return forest;
}

inline RandomForest train_forest(const std::vector<data::EncodedRecord>& records,
                                 const ForestConfig& config, std::uint64_t seed) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(records.size());
    y.reserve(records.size());
    for (const auto& r : records) {
        x.emplace_back(r.x.begin(), r.x.end());
        y.push_back(r.y);
    }
    return train_forest(x, y, config, seed);
}

// Majority vote; the reported confidence is the winning class's vote
// fraction, and prob_attack the class-1 vote fraction.
inline Prediction predict_forest(const RandomForest& forest, std::span<const double> x) {
    if (static_cast<int>(x.size()) != forest.feature_count)
        throw ShapeError("predict_forest: input length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(forest.feature_count));
    std::int64_t votes_attack = 0;
    for (const DecisionTree& tree : forest.trees) votes_attack += tree_predict(tree, x);
    const auto total = static_cast<double>(forest.trees.size());
    const double frac_attack = static_cast<double>(votes_attack) / total;
    const int cls = 2 * votes_attack > static_cast<std::int64_t>(forest.trees.size()) ? 1 : 0;
    return Prediction{cls, cls == 1 ? frac_attack : 1.0 - frac_attack, frac_attack};
}

}  // namespace idskit::baselines
