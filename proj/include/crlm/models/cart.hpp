#pragma once

// CART with exact midpoint thresholds, grown level by level. Each level scans
// every feature once in presorted order, so a tree costs O(depth * p * n)
// after a one-off O(p * n log n) sort shared by all trees on the same data.
//
// Rows carry integer weights (bootstrap multiplicities); weight 0 excludes a
// row. Labels are 0/1 for classification and arbitrary reals for regression;
// in both cases a leaf stores the weighted mean of y.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "crlm/core/error.hpp"
#include "crlm/core/matrix.hpp"
#include "crlm/core/rng.hpp"

namespace crlm {

enum class Criterion { gini, squared_error };

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;
    double weight = 0.0;
    int depth = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int k = 0;
        while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
            const auto& n = nodes[static_cast<std::size_t>(k)];
            k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(k)].value;
    }

    // Class with the higher leaf frequency; an exact 0.5 goes to class 0.
    int predict_class(std::span<const double> x) const { return predict(x) > 0.5 ? 1 : 0; }

    int depth() const {
        int d = 0;
        for (const auto& n : nodes) d = std::max(d, n.depth);
        return d;
    }

    std::size_t n_leaves() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
            return n.feature < 0;
        }));
    }
};

struct CartParams {
    int max_depth = 6;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // features tried per split; 0 = all
    Criterion criterion = Criterion::gini;
};

// Per-feature row orders, ascending by value.
struct SortedColumns {
    std::vector<std::vector<std::uint32_t>> order;

    SortedColumns() = default;
    explicit SortedColumns(const Matrix& x) : order(x.cols()) {
        for (std::size_t f = 0; f < x.cols(); ++f) {
            auto& o = order[f];
            o.resize(x.rows());
            std::iota(o.begin(), o.end(), std::uint32_t{0});
            std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
        }
    }
};

namespace detail {

struct Stats {
    double w = 0, s = 0, q = 0;  // sum of weights, w*y, w*y^2

    void add(double wi, double yi) {
        w += wi;
        s += wi * yi;
        q += wi * yi * yi;
    }
    Stats minus(const Stats& o) const { return {w - o.w, s - o.s, q - o.q}; }
};

// Weighted node impurity times node weight.
inline double total_impurity(const Stats& st, Criterion c) {
    if (st.w <= 0) return 0.0;
    if (c == Criterion::gini) return std::max(0.0, 2.0 * st.s * (st.w - st.s) / st.w);
    return std::max(0.0, st.q - st.s * st.s / st.w);
}

struct OpenNode {
    OpenNode(int id_, Stats st, std::vector<int> feats) : id(id_), stats(st), features(std::move(feats)) {}

    int id;
    Stats stats;
    std::vector<int> features;  // sorted ascending
    // best split so far
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    // scan state for the current feature
    Stats left;
    double last_x = 0.0;
    bool seen = false;
};

}  // namespace detail

// Fits one tree. `importance` (size p) accumulates impurity decrease per feature.
inline Tree fit_cart(const Matrix& x, std::span<const double> y, std::span<const double> weights,
                     const SortedColumns& sorted, const CartParams& params, Rng* rng = nullptr,
                     std::vector<double>* importance = nullptr) {
    const std::size_t n = x.rows(), p = x.cols();
    require(y.size() == n && weights.size() == n, ErrorCode::DimensionMismatch, "fit_cart: y/weights length");
    require(p > 0, ErrorCode::InvalidArgument, "fit_cart: no features");
    require(params.max_depth >= 0, ErrorCode::InvalidArgument, "max_depth must be >= 0");
    require(sorted.order.size() == p, ErrorCode::DimensionMismatch, "fit_cart: sorted columns do not match X");
    const std::size_t mtry = params.max_features == 0 ? p : std::min(params.max_features, p);
    const double min_leaf = static_cast<double>(std::max<std::size_t>(1, params.min_samples_leaf));

    Tree tree;
    std::vector<int> node_of(n, -1);
    detail::Stats root;
    for (std::size_t i = 0; i < n; ++i)
        if (weights[i] > 0) {
            root.add(weights[i], y[i]);
            node_of[i] = 0;
        }
    require(root.w > 0, ErrorCode::EmptyInput, "fit_cart: no rows with positive weight");
    tree.nodes.push_back({-1, 0.0, -1, -1, root.s / root.w, root.w, 0});

    std::vector<int> all_features(p);
    std::iota(all_features.begin(), all_features.end(), 0);
    auto pick_features = [&]() {
        if (mtry == p || rng == nullptr) return all_features;
        std::vector<int> pool = all_features;
        // partial Fisher-Yates
        for (std::size_t i = 0; i < mtry; ++i) std::swap(pool[i], pool[i + rng->index(p - i)]);
        pool.resize(mtry);
        std::sort(pool.begin(), pool.end());
        return pool;
    };

    std::vector<detail::OpenNode> open;
    open.emplace_back(0, root, pick_features());
    std::vector<int> slot_of_node(1, 0);  // node id -> index in `open`

    for (int depth = 0; depth < params.max_depth && !open.empty(); ++depth) {
        // Nodes that cannot split stay leaves.
        std::vector<detail::OpenNode> active;
        for (auto& o : open) {
            const double imp = detail::total_impurity(o.stats, params.criterion);
            if (o.stats.w >= 2 * min_leaf && imp > 0) active.push_back(std::move(o));
        }
        if (active.empty()) break;
        slot_of_node.assign(tree.nodes.size(), -1);
        for (std::size_t k = 0; k < active.size(); ++k) slot_of_node[static_cast<std::size_t>(active[k].id)] = static_cast<int>(k);

        // features_wanted[f] lists active slots considering f
        std::vector<std::vector<int>> wants(p);
        for (std::size_t k = 0; k < active.size(); ++k)
            for (int f : active[k].features) wants[static_cast<std::size_t>(f)].push_back(static_cast<int>(k));
        std::vector<char> considers(active.size());

        for (std::size_t f = 0; f < p; ++f) {
            if (wants[f].empty()) continue;
            std::fill(considers.begin(), considers.end(), 0);
            for (int k : wants[f]) {
                considers[static_cast<std::size_t>(k)] = 1;
                active[static_cast<std::size_t>(k)].left = {};
                active[static_cast<std::size_t>(k)].seen = false;
            }
            for (std::uint32_t r : sorted.order[f]) {
                const int node = node_of[r];
                if (node < 0) continue;
                const int slot = slot_of_node[static_cast<std::size_t>(node)];
                if (slot < 0 || !considers[static_cast<std::size_t>(slot)]) continue;
                auto& o = active[static_cast<std::size_t>(slot)];
                const double xv = x(r, f);
                if (o.seen && xv > o.last_x) {
                    const detail::Stats right = o.stats.minus(o.left);
                    if (o.left.w >= min_leaf && right.w >= min_leaf) {
                        const double gain = detail::total_impurity(o.stats, params.criterion) -
                                            detail::total_impurity(o.left, params.criterion) -
                                            detail::total_impurity(right, params.criterion);
                        if (gain > o.best_gain) {
                            o.best_gain = gain;
                            o.best_feature = static_cast<int>(f);
                            o.best_threshold = o.last_x + (xv - o.last_x) / 2.0;
                        }
                    }
                }
                o.left.add(weights[r], y[r]);
                o.last_x = xv;
                o.seen = true;
            }
        }

        // Apply splits.
        std::vector<detail::OpenNode> next;
        std::vector<std::pair<int, int>> children(active.size(), {-1, -1});
        for (std::size_t k = 0; k < active.size(); ++k) {
            auto& o = active[k];
            const double parent = detail::total_impurity(o.stats, params.criterion);
            if (o.best_feature < 0 || o.best_gain <= 1e-12 * std::max(1.0, parent)) continue;
            auto& node = tree.nodes[static_cast<std::size_t>(o.id)];
            node.feature = o.best_feature;
            node.threshold = o.best_threshold;
            if (importance) (*importance)[static_cast<std::size_t>(o.best_feature)] += o.best_gain;
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({-1, 0.0, -1, -1, 0.0, 0.0, depth + 1});
            tree.nodes.push_back({-1, 0.0, -1, -1, 0.0, 0.0, depth + 1});
            tree.nodes[static_cast<std::size_t>(o.id)].left = l;
            tree.nodes[static_cast<std::size_t>(o.id)].right = l + 1;
            children[k] = {l, l + 1};
        }
        std::vector<detail::Stats> child_stats(tree.nodes.size());
        for (std::size_t r = 0; r < n; ++r) {
            const int node = node_of[r];
            if (node < 0) continue;
            const int slot = static_cast<std::size_t>(node) < slot_of_node.size() ? slot_of_node[static_cast<std::size_t>(node)] : -1;
            if (slot < 0 || children[static_cast<std::size_t>(slot)].first < 0) {
                node_of[r] = -1;  // settled in a leaf
                continue;
            }
            const auto& parent = tree.nodes[static_cast<std::size_t>(node)];
            const int child = x(r, static_cast<std::size_t>(parent.feature)) <= parent.threshold ? parent.left : parent.right;
            node_of[r] = child;
            child_stats[static_cast<std::size_t>(child)].add(weights[r], y[r]);
        }
        for (std::size_t k = 0; k < active.size(); ++k) {
            for (int c : {children[k].first, children[k].second}) {
                if (c < 0) continue;
                auto& cn = tree.nodes[static_cast<std::size_t>(c)];
                const auto& st = child_stats[static_cast<std::size_t>(c)];
                cn.weight = st.w;
                cn.value = st.s / st.w;
                next.emplace_back(c, st, pick_features());
            }
        }
        open = std::move(next);
    }
    return tree;
}

inline Tree fit_cart(const Matrix& x, std::span<const double> y, const CartParams& params) {
    const std::vector<double> w(x.rows(), 1.0);
    return fit_cart(x, y, w, SortedColumns(x), params);
}

}  // namespace crlm
