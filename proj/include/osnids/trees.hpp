#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osnids/binary_io.hpp"
#include "osnids/matrix.hpp"

namespace osnids {

struct TreeNode {
    std::int32_t feature = -1; // -1 marks a leaf
    double threshold = 0.0;    // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary decision tree stored as a flat node array; node 0 is the root.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    std::size_t leaf_count() const;
    std::size_t depth() const;

    void write(ByteWriter& out) const;
    static DecisionTree read(ByteReader& in);

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct CartParams {
    int max_depth = 8;
    int min_samples_split = 2;
    /// Features tried per split; 0 means all.
    int max_features = 0;
};

/// Gini CART classifier on rows `rows` of x (duplicates allowed, as in a
/// bootstrap sample). Leaves hold the positive fraction.
DecisionTree fit_cart(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                      const CartParams& params, std::uint64_t seed);

enum class TreeGrowth { Depthwise, Leafwise };

struct BoostParams {
    TreeGrowth growth = TreeGrowth::Depthwise;
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;    // depthwise limit
    int max_leaves = 15;  // leafwise limit
    double lambda = 1.0;  // L2 on leaf values
    double min_child_hessian = 1.0;
    int min_child_samples = 1;
};

/// Additive logistic model: margin = base + sum of tree outputs.
struct BoostedTrees {
    double base_margin = 0.0;
    std::vector<DecisionTree> trees;

    double margin(std::span<const double> x) const;
};

/// Second-order gradient boosting on logistic loss. Depthwise growth splits
/// every node of a level until max_depth; leafwise growth repeatedly splits
/// the leaf with the largest gain until max_leaves.
BoostedTrees fit_boosted_trees(const Matrix& x, std::span<const double> y, const BoostParams& params);

} // namespace osnids
