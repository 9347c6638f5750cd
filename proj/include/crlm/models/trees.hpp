#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "crlm/core/numeric.hpp"
#include "crlm/models/cart.hpp"

namespace crlm {

enum class EnsembleMode { bagging, boosting };

struct ForestParams {
    std::size_t n_trees = 100;
    int max_depth = 6;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 = floor(sqrt(p))
    bool subsample_features = true;
    bool bootstrap = true;
};

struct BoostingParams {
    std::size_t n_trees = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    std::size_t min_samples_leaf = 1;
};

struct TreeEnsembleModel {
    EnsembleMode mode = EnsembleMode::bagging;
    std::vector<Tree> trees;
    double init = 0.0;           // boosting: starting log-odds
    double learning_rate = 0.1;  // boosting only
    int max_depth = 0;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;
    bool bootstrap = false;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::vector<double> split_gain;  // summed impurity decrease per feature
    std::optional<double> oob_accuracy;

    double raw_score(std::span<const double> x) const {
        if (mode == EnsembleMode::boosting) {
            double f = init;
            for (const auto& t : trees) f += learning_rate * t.predict(x);
            return f;
        }
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x);
        return trees.empty() ? 0.5 : s / static_cast<double>(trees.size());
    }

    double predict_proba(std::span<const double> x) const {
        return mode == EnsembleMode::boosting ? numeric::logistic(raw_score(x)) : raw_score(x);
    }
};

namespace detail {
inline void check_tree_inputs(const Matrix& x, std::span<const int> y) {
    require(x.rows() == y.size(), ErrorCode::DimensionMismatch, "tree model: X rows != labels");
    require(x.rows() > 0 && x.cols() > 0, ErrorCode::EmptyInput, "tree model: empty design matrix");
    std::size_t pos = 0;
    for (int v : y) {
        require(v == 0 || v == 1, ErrorCode::InvalidArgument, "labels must be 0/1");
        pos += static_cast<std::size_t>(v);
    }
    require(pos > 0 && pos < y.size(), ErrorCode::SingleClass, "labels contain a single class");
    for (double v : x.data()) require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite feature value");
}
}  // namespace detail

inline TreeEnsembleModel fit_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params,
                                           std::uint64_t seed) {
    detail::check_tree_inputs(x, y);
    require(params.n_trees >= 1, ErrorCode::InvalidArgument, "forest needs at least one tree");
    const std::size_t n = x.rows(), p = x.cols();
    TreeEnsembleModel m;
    m.mode = EnsembleMode::bagging;
    m.max_depth = params.max_depth;
    m.min_samples_leaf = params.min_samples_leaf;
    m.bootstrap = params.bootstrap;
    m.seed = seed;
    m.n_features = p;
    m.max_features = !params.subsample_features ? p
                     : params.max_features ? std::min(params.max_features, p)
                                           : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));
    m.split_gain.assign(p, 0.0);

    const std::vector<double> yd(y.begin(), y.end());
    const SortedColumns sorted(x);
    const CartParams cp{params.max_depth, params.min_samples_leaf, m.max_features, Criterion::gini};
    std::vector<double> oob_sum(n, 0.0);
    std::vector<std::size_t> oob_n(n, 0);
    std::vector<double> w(n);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, t));
        if (params.bootstrap) {
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) w[rng.index(n)] += 1.0;
        } else {
            std::fill(w.begin(), w.end(), 1.0);
        }
        m.trees.push_back(fit_cart(x, yd, w, sorted, cp, &rng, &m.split_gain));
        if (params.bootstrap)
            for (std::size_t i = 0; i < n; ++i)
                if (w[i] == 0.0) {
                    oob_sum[i] += m.trees.back().predict(x.row(i));
                    ++oob_n[i];
                }
    }
    if (params.bootstrap) {
        std::size_t hits = 0, used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!oob_n[i]) continue;
            ++used;
            const int cls = oob_sum[i] / static_cast<double>(oob_n[i]) > 0.5 ? 1 : 0;
            hits += cls == y[i];
        }
        if (used) m.oob_accuracy = static_cast<double>(hits) / static_cast<double>(used);
    }
    return m;
}

// Logistic-loss boosting. Each stage fits a squared-error tree to the
// residual y - p; leaves hold the mean residual.
inline TreeEnsembleModel fit_gradient_boosting(const Matrix& x, std::span<const int> y,
                                               const BoostingParams& params, std::uint64_t seed) {
    detail::check_tree_inputs(x, y);
    require(params.learning_rate > 0, ErrorCode::InvalidArgument, "learning_rate must be positive");
    const std::size_t n = x.rows(), p = x.cols();
    TreeEnsembleModel m;
    m.mode = EnsembleMode::boosting;
    m.learning_rate = params.learning_rate;
    m.max_depth = params.max_depth;
    m.min_samples_leaf = params.min_samples_leaf;
    m.seed = seed;
    m.n_features = p;
    m.max_features = p;
    m.split_gain.assign(p, 0.0);
    double ybar = 0.0;
    for (int v : y) ybar += v;
    ybar /= static_cast<double>(n);
    m.init = numeric::logit(ybar);

    const SortedColumns sorted(x);
    const CartParams cp{params.max_depth, params.min_samples_leaf, 0, Criterion::squared_error};
    const std::vector<double> w(n, 1.0);
    std::vector<double> f(n, m.init), resid(n);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - numeric::logistic(f[i]);
        m.trees.push_back(fit_cart(x, resid, w, sorted, cp, nullptr, &m.split_gain));
        for (std::size_t i = 0; i < n; ++i) f[i] += params.learning_rate * m.trees.back().predict(x.row(i));
    }
    return m;
}

inline double training_log_loss(const TreeEnsembleModel& m, const Matrix& x, std::span<const int> y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double f = m.raw_score(x.row(i));
        loss += numeric::softplus(f) - y[i] * f;
    }
    return loss / static_cast<double>(x.rows());
}

}  // namespace crlm
