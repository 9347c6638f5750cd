#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crlm/eval/bootstrap.hpp"
#include "crlm/eval/cv.hpp"
#include "crlm/synthetic.hpp"
#include "test_util.hpp"

using namespace crlm;

namespace {

// Positives ~ N(1,1), negatives ~ N(0,1).
std::pair<std::vector<double>, std::vector<int>> planted(std::size_t n, Rng& rng) {
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2 == 0;
        s[i] = rng.normal(y[i] ? 1.0 : 0.0, 1.0);
    }
    return {s, y};
}

// Large-sample AUC of the planted model, by direct simulation.
double monte_carlo_auc(std::uint64_t seed) {
    Rng rng(seed);
    double hit = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) hit += rng.normal(1.0, 1.0) > rng.normal(0.0, 1.0);
    return hit / n;
}

ModelSpec small_forest() {
    ForestParams fp;
    fp.n_trees = 10;
    return ModelSpec::make_forest(fp);
}

FeatureTable tiny_table(std::size_t n) {
    std::vector<std::string> ids;
    std::vector<Value> a, b;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("R" + std::to_string(i));
        a.emplace_back(double(i));
        b.emplace_back(double((i * 7) % 5));
    }
    std::vector<ColumnInfo> cols = {{"a", VariableKind::continuous, Provenance::clinical, TemporalTag::baseline, "a", false},
                                    {"b", VariableKind::continuous, Provenance::clinical, TemporalTag::baseline, "b", false}};
    return FeatureTable(ids, cols, {a, b});
}

}  // namespace

TEST(Bootstrap, ConstantMetricCollapses) {
    Rng rng(1);
    const auto [s, y] = planted(50, rng);
    const auto ci = bootstrap_ci([](auto, auto) { return 0.42; }, s, y, 200, 3);
    EXPECT_EQ(ci.lower, 0.42);
    EXPECT_EQ(ci.point, 0.42);
    EXPECT_EQ(ci.upper, 0.42);
}

TEST(Bootstrap, SameSeedSameInterval) {
    Rng rng(2);
    const auto [s, y] = planted(60, rng);
    const auto a = bootstrap_auc(s, y, 500, 9);
    const auto b = bootstrap_auc(s, y, 500, 9);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
    EXPECT_NE(a.samples, bootstrap_auc(s, y, 500, 10).samples);
}

TEST(Bootstrap, BoundsAreOrderStatisticsOfTheSampleLog) {
    Rng rng(3);
    const auto [s, y] = planted(40, rng);
    const auto ci = bootstrap_auc(s, y, 1000, 4);
    // reconstruct from the emitted CSV
    const auto rows = parse_csv_text(bootstrap_samples_csv(ci));
    std::vector<double> v;
    for (std::size_t i = 1; i < rows.size(); ++i) v.push_back(*parse_double(rows[i][1]));
    ASSERT_EQ(v.size() + ci.n_degenerate, 1000u);
    std::sort(v.begin(), v.end());
    const double m1 = static_cast<double>(v.size() - 1);
    EXPECT_EQ(ci.lower, v[static_cast<std::size_t>(std::floor(0.025 * m1))]);
    EXPECT_EQ(ci.upper, v[static_cast<std::size_t>(std::ceil(0.975 * m1))]);
    EXPECT_LE(ci.lower, ci.point);
    EXPECT_LE(ci.point, ci.upper);
}

TEST(Bootstrap, FortySampleIntervalBracketsLargeSampleAuc) {
    const double truth = monte_carlo_auc(12345);
    EXPECT_NEAR(truth, 0.7602499389, 0.005);  // Phi(1/sqrt 2)
    Rng rng(2024);
    const auto [s, y] = planted(40, rng);
    const auto ci = bootstrap_auc(s, y, 1000, 1);
    EXPECT_LE(ci.lower, truth);
    EXPECT_GE(ci.upper, truth);
}

TEST(Bootstrap, CoverageOverManyDatasets) {
    const double truth = 0.7602499389;
    Rng rng(77);
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const auto [s, y] = planted(40, rng);
        const auto ci = bootstrap_auc(s, y, 200, static_cast<std::uint64_t>(t));
        covered += ci.lower <= truth && truth <= ci.upper;
    }
    // percentile intervals at n = 40 run a little short of nominal
    EXPECT_GT(covered, static_cast<int>(0.85 * trials));
}

TEST(Bootstrap, Preconditions) {
    const std::vector<double> s = {0.1, 0.9};
    const std::vector<int> y = {0, 1};
    EXPECT_CODE(bootstrap_auc(s, y, 99, 1), ErrorCode::InvalidArgument);
}

TEST(Bootstrap, MajorityDegenerateRaises) {
    // Two rows: each resample lacks a class with probability 1/2.
    const std::vector<double> s = {0.1, 0.9};
    const std::vector<int> y = {0, 1};
    int raised = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        try {
            const auto ci = bootstrap_auc(s, y, 100, seed);
            EXPECT_LE(2 * ci.n_degenerate, 100u);
            EXPECT_EQ(ci.samples.size() + ci.n_degenerate, 100u);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::DegenerateResamples);
            ++raised;
        }
    }
    EXPECT_GT(raised, 0);
    EXPECT_LT(raised, 20);
}

TEST(CrossValidate, LeaveOneOutOnSixRows) {
    const auto t = tiny_table(6);
    const std::vector<int> y = {0, 1, 0, 1, 0, 1};
    CvOptions opt;
    opt.n_folds = 6;
    const auto r = cross_validate(t, y, small_forest(), opt, 1);
    EXPECT_EQ(r.folds.size(), 6u);
    for (const auto& f : r.folds) {
        EXPECT_EQ(f.test_rows.size(), 1u);
        EXPECT_TRUE(std::isnan(f.auc));
    }
    EXPECT_EQ(r.folds_scored, 0u);
}

TEST(CrossValidate, HygieneAndDeterminism) {
    const auto cohort = generate_synthetic_cohort(240, 5, PlantedSignal::metabolic);
    const auto table = baseline_only_filter(FeatureTable::from_cohort(drop_high_missingness(cohort).cohort)).data;
    const auto y = make_horizon_labels(cohort, 6).labels;
    const auto a = cross_validate(table, y, small_forest(), CvOptions{}, 3);
    const auto b = cross_validate(table, y, small_forest(), CvOptions{}, 3);
    EXPECT_EQ(a.folds.size(), 5u);
    EXPECT_EQ(a.test_rows_read_during_fit(), 0u);
    for (const auto& f : a.folds) {
        EXPECT_FALSE(f.rows_read_during_fit.empty());
        for (auto r : f.rows_read_during_fit)
            EXPECT_TRUE(std::binary_search(f.train_rows.begin(), f.train_rows.end(), r));
    }
    for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(a.folds[f].auc, b.folds[f].auc);
    EXPECT_EQ(a.mean_auc, b.mean_auc);
    EXPECT_GT(a.sd_auc, 0.0);
}

TEST(CrossValidate, SingleClassTrainingFoldRejected) {
    const auto t = tiny_table(6);
    const std::vector<int> y = {0, 0, 0, 0, 0, 1};
    CvOptions opt;
    opt.smote = false;
    opt.n_folds = 2;
    EXPECT_CODE(cross_validate(t, y, small_forest(), opt, 1), ErrorCode::SingleClass);
}
