#include "osnids/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osnids/random.hpp"

namespace osnids {

double DecisionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) {
        return 0;
    }
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

void DecisionTree::write(ByteWriter& out) const {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(nodes.size()));
    for (const auto& n : nodes) {
        out.put(n.feature);
        out.put(n.threshold);
        out.put(n.left);
        out.put(n.right);
        out.put(n.value);
    }
}

DecisionTree DecisionTree::read(ByteReader& in) {
    DecisionTree tree;
    const auto count = in.get<std::uint32_t>();
    if (count == 0 || count > in.remaining() / 28) {
        fail(ErrorCode::ManifestInvalid, "tree node count inconsistent with data");
    }
    tree.nodes.resize(count);
    for (auto& n : tree.nodes) {
        n.feature = in.get<std::int32_t>();
        n.threshold = in.get<double>();
        n.left = in.get<std::int32_t>();
        n.right = in.get<std::int32_t>();
        n.value = in.get<double>();
    }
    // Children must point forward so predict() terminates.
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (!n.is_leaf() && (n.left <= std::int32_t(i) || n.right <= std::int32_t(i) ||
                             n.left >= std::int32_t(count) || n.right >= std::int32_t(count))) {
            fail(ErrorCode::ManifestInvalid, "tree node links are inconsistent");
        }
    }
    return tree;
}

namespace {

// Threshold strictly separating lo < hi.
double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

class CartBuilder {
public:
    CartBuilder(const Matrix& x, std::span<const double> y, const CartParams& params, std::uint64_t seed)
        : x_(x), y_(y), params_(params), rng_(make_rng(seed, 0x63617274)), features_(x.cols()) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    std::int32_t build(std::vector<std::size_t> rows, int depth) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        double positives = 0.0;
        for (auto r : rows) {
            positives += y_[r];
        }
        const double n = static_cast<double>(rows.size());
        tree.nodes[std::size_t(id)].value = n > 0.0 ? positives / n : 0.0;
        if (depth >= params_.max_depth || rows.size() < std::size_t(params_.min_samples_split) || positives == 0.0 ||
            positives == n) {
            return id;
        }

        std::size_t tried = features_.size();
        if (params_.max_features > 0 && std::size_t(params_.max_features) < features_.size()) {
            tried = std::size_t(params_.max_features);
            // Partial Fisher-Yates: the first `tried` entries are the sample.
            for (std::size_t i = 0; i < tried; ++i) {
                const std::size_t j = i + uniform_below(rng_, features_.size() - i);
                std::swap(features_[i], features_[j]);
            }
        }

        const double parent_impurity = n - (positives * positives + (n - positives) * (n - positives)) / n;
        double best_impurity = parent_impurity - 1e-12;
        std::int32_t best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> sorted = rows;
        for (std::size_t t = 0; t < tried; ++t) {
            const std::size_t f = features_[t];
            std::sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x_(a, f) < x_(b, f); });
            double left_n = 0.0, left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_n += 1.0;
                left_pos += y_[sorted[i]];
                const double lo = x_(sorted[i], f);
                const double hi = x_(sorted[i + 1], f);
                if (lo == hi) {
                    continue;
                }
                const double right_n = n - left_n;
                const double right_pos = positives - left_pos;
                // n * weighted Gini = sum over sides of (size - sum_c count_c^2 / size).
                const double impurity =
                    left_n - (left_pos * left_pos + (left_n - left_pos) * (left_n - left_pos)) / left_n + right_n -
                    (right_pos * right_pos + (right_n - right_pos) * (right_n - right_pos)) / right_n;
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = std::int32_t(f);
                    best_threshold = midpoint(lo, hi);
                }
            }
        }
        if (best_feature < 0) {
            return id;
        }
        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            (x_(r, std::size_t(best_feature)) <= best_threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const std::int32_t l = build(std::move(left), depth + 1);
        const std::int32_t r = build(std::move(right), depth + 1);
        auto& node = tree.nodes[std::size_t(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    DecisionTree tree;

private:
    const Matrix& x_;
    std::span<const double> y_;
    CartParams params_;
    Rng rng_;
    std::vector<std::size_t> features_;
};

struct SplitCandidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

struct GrowNode {
    std::vector<std::size_t> rows;
    double g = 0.0;
    double h = 0.0;
    int depth = 0;
    std::int32_t tree_index = 0;
    SplitCandidate split;
};

class BoostTreeBuilder {
public:
    BoostTreeBuilder(const Matrix& x, const std::vector<double>& g, const std::vector<double>& h,
                     const BoostParams& params)
        : x_(x), g_(g), h_(h), params_(params) {}

    DecisionTree build() {
        std::vector<std::size_t> all(x_.rows());
        std::iota(all.begin(), all.end(), 0);
        tree_.nodes.clear();
        std::vector<GrowNode> leaves;
        leaves.push_back(make_node(std::move(all), 0));
        if (params_.growth == TreeGrowth::Depthwise) {
            grow_depthwise(leaves);
        } else {
            grow_leafwise(leaves);
        }
        return std::move(tree_);
    }

private:
    double score(double g, double h) const { return g * g / (h + params_.lambda); }

    GrowNode make_node(std::vector<std::size_t> rows, int depth) {
        GrowNode node;
        for (auto r : rows) {
            node.g += g_[r];
            node.h += h_[r];
        }
        node.rows = std::move(rows);
        node.depth = depth;
        node.tree_index = static_cast<std::int32_t>(tree_.nodes.size());
        TreeNode leaf;
        leaf.value = -params_.learning_rate * node.g / (node.h + params_.lambda);
        tree_.nodes.push_back(leaf);
        node.split = best_split(node);
        return node;
    }

    SplitCandidate best_split(const GrowNode& node) const {
        SplitCandidate best;
        const double parent = score(node.g, node.h);
        std::vector<std::size_t> sorted = node.rows;
        const auto min_samples = std::size_t(std::max(1, params_.min_child_samples));
        for (std::size_t f = 0; f < x_.cols(); ++f) {
            std::sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return x_(a, f) < x_(b, f); });
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                gl += g_[sorted[i]];
                hl += h_[sorted[i]];
                const double lo = x_(sorted[i], f);
                const double hi = x_(sorted[i + 1], f);
                if (lo == hi || i + 1 < min_samples || sorted.size() - (i + 1) < min_samples) {
                    continue;
                }
                const double gr = node.g - gl;
                const double hr = node.h - hl;
                if (hl < params_.min_child_hessian || hr < params_.min_child_hessian) {
                    continue;
                }
                const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent);
                if (gain > best.gain + 1e-12) {
                    best = {gain, std::int32_t(f), midpoint(lo, hi)};
                }
            }
        }
        return best;
    }

    std::pair<GrowNode, GrowNode> split(GrowNode& node) {
        std::vector<std::size_t> left, right;
        const auto f = std::size_t(node.split.feature);
        for (auto r : node.rows) {
            (x_(r, f) <= node.split.threshold ? left : right).push_back(r);
        }
        GrowNode l = make_node(std::move(left), node.depth + 1);
        GrowNode r = make_node(std::move(right), node.depth + 1);
        auto& t = tree_.nodes[std::size_t(node.tree_index)];
        t.feature = node.split.feature;
        t.threshold = node.split.threshold;
        t.left = l.tree_index;
        t.right = r.tree_index;
        return {std::move(l), std::move(r)};
    }

    void grow_depthwise(std::vector<GrowNode> level) {
        while (!level.empty()) {
            std::vector<GrowNode> next;
            for (auto& node : level) {
                if (node.depth >= params_.max_depth || node.split.feature < 0) {
                    continue;
                }
                auto [l, r] = split(node);
                next.push_back(std::move(l));
                next.push_back(std::move(r));
            }
            level = std::move(next);
        }
    }

    void grow_leafwise(std::vector<GrowNode> leaves) {
        while (leaves.size() < std::size_t(params_.max_leaves)) {
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].split.feature >= 0 && (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain)) {
                    pick = i;
                }
            }
            if (pick == leaves.size()) {
                break;
            }
            auto [l, r] = split(leaves[pick]);
            leaves[pick] = std::move(l);
            leaves.push_back(std::move(r));
        }
    }

    const Matrix& x_;
    const std::vector<double>& g_;
    const std::vector<double>& h_;
    BoostParams params_;
    DecisionTree tree_;
};

} // namespace

DecisionTree fit_cart(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                      const CartParams& params, std::uint64_t seed) {
    CartBuilder builder(x, y, params, seed);
    builder.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return std::move(builder.tree);
}

double BoostedTrees::margin(std::span<const double> x) const {
    double m = base_margin;
    for (const auto& t : trees) {
        m += t.predict(x);
    }
    return m;
}

BoostedTrees fit_boosted_trees(const Matrix& x, std::span<const double> y, const BoostParams& params) {
    const std::size_t n = x.rows();
    BoostedTrees model;
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean = std::clamp(mean / double(n), 1e-6, 1.0 - 1e-6);
    model.base_margin = std::log(mean / (1.0 - mean));

    std::vector<double> margin(n, model.base_margin);
    std::vector<double> g(n), h(n);
    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-margin[i]));
            g[i] = p - y[i];
            h[i] = std::max(p * (1.0 - p), 1e-16);
        }
        DecisionTree tree = BoostTreeBuilder(x, g, h, params).build();
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += tree.predict(x.row(i));
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

} // namespace osnids
