#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "crlm/core/rng.hpp"
#include "crlm/eval/roc.hpp"
#include "crlm/models/model.hpp"
#include "test_util.hpp"

using namespace crlm;

namespace {

struct Data {
    Matrix x;
    std::vector<int> y;
    std::vector<double> yd() const { return {y.begin(), y.end()}; }
};

Data threshold_1d(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Data d{Matrix(n, 1), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.x(i, 0) = rng.uniform(-1, 1);
        d.y[i] = d.x(i, 0) >= 0 ? 1 : 0;
    }
    return d;
}

Data blobs(std::size_t n, std::uint64_t seed, double sep = 3.0) {
    Rng rng(seed);
    Data d{Matrix(n, 2), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.y[i] = static_cast<int>(i % 2);
        d.x(i, 0) = rng.normal(d.y[i] ? sep : 0.0, 1.0);
        d.x(i, 1) = rng.normal(d.y[i] ? sep : 0.0, 1.0);
    }
    return d;
}

Data noisy(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    Data d{Matrix(n, p), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0;
        for (std::size_t j = 0; j < p; ++j) {
            d.x(i, j) = rng.normal();
            eta += (j < 3 ? 1.0 : 0.0) * d.x(i, j);
        }
        d.y[i] = rng.bernoulli(numeric::logistic(eta)) ? 1 : 0;
    }
    return d;
}

double gini(double pos, double n) {
    if (n == 0) return 0;
    const double p = pos / n;
    return n * 2 * p * (1 - p);
}

// Best root partition by exhaustive enumeration of features and cut points.
std::set<std::size_t> oracle_root_left(const Data& d) {
    double best = -1;
    std::set<std::size_t> best_left;
    double tot_pos = 0;
    for (int v : d.y) tot_pos += v;
    const double n = static_cast<double>(d.y.size());
    for (std::size_t j = 0; j < d.x.cols(); ++j) {
        std::set<double> values;
        for (std::size_t i = 0; i < d.x.rows(); ++i) values.insert(d.x(i, j));
        for (double cut : values) {
            std::set<std::size_t> left;
            double lp = 0;
            for (std::size_t i = 0; i < d.x.rows(); ++i)
                if (d.x(i, j) <= cut) {
                    left.insert(i);
                    lp += d.y[i];
                }
            if (left.size() == d.y.size()) continue;
            const double ln = static_cast<double>(left.size());
            const double gain = gini(tot_pos, n) - gini(lp, ln) - gini(tot_pos - lp, n - ln);
            if (gain > best + 1e-12) {
                best = gain;
                best_left = left;
            }
        }
    }
    return best_left;
}

double accuracy(const Tree& t, const Data& d) {
    double hit = 0;
    for (std::size_t i = 0; i < d.x.rows(); ++i) hit += t.predict_class(d.x.row(i)) == d.y[i];
    return hit / static_cast<double>(d.x.rows());
}

}  // namespace

TEST(Cart, PureNodeIsLeaf) {
    const auto x = Matrix::from_rows({{1}, {2}, {3}});
    const std::vector<double> y = {1, 1, 1};
    const auto t = fit_cart(x, y, CartParams{});
    EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.nodes[0].value, 1.0);
}

TEST(Cart, StumpCannotSplitXor) {
    Data d{Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}}), {0, 1, 1, 0}};
    const auto t = fit_cart(d.x, d.yd(), CartParams{1, 1, 0, Criterion::gini});
    EXPECT_LE(t.depth(), 1);
    EXPECT_DOUBLE_EQ(accuracy(t, d), 0.5);
}

TEST(Cart, ThresholdDataSplitsOnceNearZero) {
    const auto d = threshold_1d(200, 3);
    const auto t = fit_cart(d.x, d.yd(), CartParams{});
    EXPECT_EQ(t.nodes.size(), 3u);
    EXPECT_NEAR(t.nodes[0].threshold, 0.0, 0.05);
    EXPECT_DOUBLE_EQ(accuracy(t, d), 1.0);
}

TEST(Cart, RootMatchesExhaustiveSplitSearch) {
    for (std::uint64_t s = 1; s <= 25; ++s) {
        const auto d = noisy(40, 3, s);
        const auto t = fit_cart(d.x, d.yd(), CartParams{1, 1, 0, Criterion::gini});
        if (t.nodes.size() == 1) continue;
        std::set<std::size_t> left;
        for (std::size_t i = 0; i < d.x.rows(); ++i)
            if (d.x(i, static_cast<std::size_t>(t.nodes[0].feature)) <= t.nodes[0].threshold) left.insert(i);
        EXPECT_EQ(left, oracle_root_left(d)) << "seed " << s;
    }
}

TEST(Cart, GainTiesPreferLowerFeature) {
    auto x = Matrix::from_rows({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
    const std::vector<double> y = {0, 0, 1, 1};
    const auto t = fit_cart(x, y, CartParams{});
    EXPECT_EQ(t.nodes[0].feature, 0);
}

TEST(Cart, DepthBoundAndFiniteLeaves) {
    const auto d = noisy(300, 6, 4);
    for (int depth : {1, 2, 4, 7}) {
        const auto t = fit_cart(d.x, d.yd(), CartParams{depth, 3, 0, Criterion::gini});
        EXPECT_LE(t.depth(), depth);
        for (const auto& n : t.nodes)
            if (n.feature < 0) EXPECT_TRUE(std::isfinite(n.value));
    }
}

TEST(Cart, MonotoneTransformKeepsTrainingPredictions) {
    const auto d = noisy(150, 3, 9);
    Data e = d;
    for (std::size_t i = 0; i < e.x.rows(); ++i) {
        e.x(i, 0) = std::exp(e.x(i, 0));
        e.x(i, 1) = std::pow(e.x(i, 1), 3) - 2;
    }
    const CartParams p{4, 2, 0, Criterion::gini};
    const auto a = fit_cart(d.x, d.yd(), p);
    const auto b = fit_cart(e.x, e.yd(), p);
    for (std::size_t i = 0; i < d.x.rows(); ++i) EXPECT_EQ(a.predict(d.x.row(i)), b.predict(e.x.row(i)));
}

TEST(Forest, SingleTreeWithoutRandomnessIsCart) {
    const auto d = noisy(120, 4, 2);
    ForestParams fp;
    fp.n_trees = 1;
    fp.max_depth = 40;
    fp.bootstrap = false;
    fp.subsample_features = false;
    const auto f = fit_random_forest(d.x, d.y, fp, 1);
    const auto t = fit_cart(d.x, d.yd(), CartParams{40, 1, 0, Criterion::gini});
    for (std::size_t i = 0; i < d.x.rows(); ++i) EXPECT_EQ(f.predict_proba(d.x.row(i)), t.predict(d.x.row(i)));
}

TEST(Forest, SameSeedSameModel) {
    const auto d = noisy(100, 5, 3);
    ForestParams fp;
    fp.n_trees = 20;
    const auto a = model_to_json(TrainedModel{fit_random_forest(d.x, d.y, fp, 7)}).dump();
    EXPECT_EQ(a, model_to_json(TrainedModel{fit_random_forest(d.x, d.y, fp, 7)}).dump());
    EXPECT_NE(a, model_to_json(TrainedModel{fit_random_forest(d.x, d.y, fp, 8)}).dump());
}

TEST(Forest, SeparableBlobsOutOfBag) {
    const auto d = blobs(300, 5);
    const auto f = fit_random_forest(d.x, d.y, ForestParams{}, 1);
    ASSERT_TRUE(f.oob_accuracy.has_value());
    EXPECT_GT(*f.oob_accuracy, 0.9);
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
        const double p = f.predict_proba(d.x.row(i));
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(Boosting, ZeroTreesIsBaseRate) {
    const auto d = noisy(80, 2, 6);
    BoostingParams bp;
    bp.n_trees = 0;
    const auto m = fit_gradient_boosting(d.x, d.y, bp, 1);
    double ybar = 0;
    for (int v : d.y) ybar += v;
    ybar /= 80;
    EXPECT_NEAR(m.predict_proba(d.x.row(0)), ybar, 1e-12);
    EXPECT_NEAR(m.raw_score(d.x.row(5)), numeric::logit(ybar), 1e-12);
}

TEST(Boosting, TrainingLossNonIncreasing) {
    const auto d = noisy(200, 4, 8);
    double prev = 1e300;
    for (std::size_t k = 0; k <= 60; k += 5) {
        BoostingParams bp;
        bp.n_trees = k;
        const double loss = training_log_loss(fit_gradient_boosting(d.x, d.y, bp, 1), d.x, d.y);
        EXPECT_LE(loss, prev + 1e-9) << k;
        prev = loss;
    }
}

TEST(Boosting, ThresholdDataReachesPerfectAuc) {
    const auto d = threshold_1d(150, 2);
    BoostingParams bp;
    bp.n_trees = 50;
    const auto m = fit_gradient_boosting(d.x, d.y, bp, 1);
    EXPECT_DOUBLE_EQ(auc(predict_all(TrainedModel{m}, d.x), d.y), 1.0);
}

TEST(Trees, SingleClassRejected) {
    const auto x = Matrix::from_rows({{1}, {2}});
    const std::vector<int> y = {1, 1};
    EXPECT_CODE(fit_random_forest(x, y, ForestParams{}, 1), ErrorCode::SingleClass);
    EXPECT_CODE(fit_gradient_boosting(x, y, BoostingParams{}, 1), ErrorCode::SingleClass);
}
