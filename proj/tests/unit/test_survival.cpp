#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crlm/core/rng.hpp"
#include "crlm/survival/concordance.hpp"
#include "crlm/survival/cox.hpp"
#include "crlm/survival/kaplan_meier.hpp"
#include "test_util.hpp"

using namespace crlm;

namespace {

// Exponential times with rate base * ratio^group, uniform censoring.
SurvivalDataset two_group_data(std::size_t n, double ratio, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 77));
    SurvivalDataset d;
    d.covariates = Matrix(n, 1);
    d.covariate_names = {"g"};
    for (std::size_t i = 0; i < n; ++i) {
        const int g = rng.bernoulli(0.5) ? 1 : 0;
        const double t = rng.exponential(0.05 * std::pow(ratio, g));
        const double c = rng.uniform(0.0, 40.0);
        d.time.push_back(std::min(t, c));
        d.event.push_back(t <= c ? 1 : 0);
        d.covariates(i, 0) = g;
        d.group.push_back(g ? "b" : "a");
    }
    return d;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(KaplanMeier, AllEvents) {
    const std::vector<double> t{1, 2, 3};
    const std::vector<int> e{1, 1, 1};
    const auto km = kaplan_meier(t, e);
    ASSERT_EQ(km.steps.size(), 3u);
    EXPECT_NEAR(km.survival_at(1), 2.0 / 3, 1e-12);
    EXPECT_NEAR(km.survival_at(2), 1.0 / 3, 1e-12);
    EXPECT_NEAR(km.survival_at(3), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(km.survival_at(0.5), 1.0);
    ASSERT_TRUE(km.median.has_value());
    EXPECT_DOUBLE_EQ(*km.median, 2.0);
}

TEST(KaplanMeier, CensoringShrinksRiskSet) {
    const std::vector<double> t{1, 2, 3};
    const std::vector<int> e{1, 0, 1};
    const auto km = kaplan_meier(t, e);
    ASSERT_EQ(km.steps.size(), 2u);
    EXPECT_NEAR(km.survival_at(1), 2.0 / 3, 1e-12);
    EXPECT_NEAR(km.survival_at(2.5), 2.0 / 3, 1e-12);
    EXPECT_NEAR(km.survival_at(3), 0.0, 1e-12);
    EXPECT_EQ(km.steps[1].n_at_risk, 1u);
}

TEST(KaplanMeier, AllCensored) {
    const std::vector<double> t{1, 2, 3, 4};
    const std::vector<int> e{0, 0, 0, 0};
    const auto km = kaplan_meier(t, e);
    EXPECT_TRUE(km.steps.empty());
    for (double x : {0.0, 2.0, 10.0}) EXPECT_DOUBLE_EQ(km.survival_at(x), 1.0);
    EXPECT_FALSE(km.median.has_value());
}

TEST(KaplanMeier, MatchesEmpiricalWithoutCensoring) {
    Rng rng(11);
    std::vector<double> t;
    for (int i = 0; i < 200; ++i) t.push_back(std::round(rng.exponential(0.3) * 10) / 10);
    const std::vector<int> e(t.size(), 1);
    const auto km = kaplan_meier(t, e);
    for (double x = 0; x < 30; x += 0.37) {
        const double frac = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double v) { return v > x; })) /
                            static_cast<double>(t.size());
        EXPECT_NEAR(km.survival_at(x), frac, 1e-12) << x;
    }
}

TEST(KaplanMeier, StepsMonotone) {
    const auto d = two_group_data(300, 2.0, 4);
    const auto km = kaplan_meier(d);
    double prev_s = 1.0;
    std::size_t prev_r = d.size() + 1;
    for (const auto& st : km.steps) {
        EXPECT_LE(st.survival, prev_s);
        EXPECT_GE(st.survival, 0.0);
        EXPECT_LT(st.n_at_risk, prev_r);
        EXPECT_EQ(st.n_at_risk, km.at_risk(st.time));
        prev_s = st.survival;
        prev_r = st.n_at_risk;
    }
}

TEST(KaplanMeier, RejectsNegativeTime) {
    const std::vector<double> t{1, -2};
    const std::vector<int> e{1, 1};
    EXPECT_CODE(kaplan_meier(t, e), ErrorCode::InvalidArgument);
}

TEST(LogRank, IdenticalGroups) {
    SurvivalDataset d;
    for (const char* g : {"a", "b"})
        for (double t : {1.0, 2.0, 3.0, 4.0, 5.0}) {
            d.time.push_back(t);
            d.event.push_back(1);
            d.group.push_back(g);
        }
    const auto r = log_rank_test(d);
    EXPECT_NEAR(r.chi_square, 0.0, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0, 1e-9);
    EXPECT_EQ(r.df, 1u);
}

TEST(LogRank, SeparatedGroups) {
    SurvivalDataset d;
    for (int i = 0; i < 12; ++i) {
        d.time.push_back(1 + i * 0.1);
        d.event.push_back(1);
        d.group.push_back("early");
        d.time.push_back(20 + i);
        d.event.push_back(1);
        d.group.push_back("late");
    }
    EXPECT_LT(log_rank_test(d).p_value, 0.01);
}

TEST(LogRank, LabelSwapInvariant) {
    auto d = two_group_data(200, 2.5, 9);
    const double a = log_rank_test(d).chi_square;
    for (auto& g : d.group) g = g == "a" ? "b" : "a";
    EXPECT_NEAR(log_rank_test(d).chi_square, a, 1e-9);
}

TEST(LogRank, CopiesOfOneSample) {
    const auto base = two_group_data(60, 1.0, 2);
    SurvivalDataset d;
    for (const char* g : {"x", "y", "z"})
        for (std::size_t i = 0; i < base.size(); ++i) {
            d.time.push_back(base.time[i]);
            d.event.push_back(base.event[i]);
            d.group.push_back(g);
        }
    const auto r = log_rank_test(d);
    EXPECT_LT(r.chi_square, 1e-9);
    EXPECT_EQ(r.df, 2u);
}

TEST(LogRank, GroupErrors) {
    SurvivalDataset d{{1, 2, 3}, {1, 1, 0}, {}, {}, {"a", "a", "a"}};
    EXPECT_CODE(log_rank_test(d), ErrorCode::InvalidArgument);
    d.group = {"a", "b", "a"};
    EXPECT_CODE(log_rank_test(d, {"a", "b", "c"}), ErrorCode::EmptyInput);
}

TEST(Cox, RateRatioThree) {
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const auto m = fit_cox(two_group_data(500, 3.0, s));
        ASSERT_TRUE(m.converged);
        const auto& c = m.coefficients[0];
        EXPECT_GE(c.hazard_ratio, 2.2) << s;
        EXPECT_LE(c.hazard_ratio, 4.0) << s;
        EXPECT_NEAR(c.hazard_ratio, std::exp(c.beta), 1e-12);
        EXPECT_GT(c.ci_lower, 0.0);
        EXPECT_LT(c.ci_lower, c.hazard_ratio);
        EXPECT_GT(c.ci_upper, c.hazard_ratio);
        EXPECT_GE(m.c_index, 0.5);
    }
}

TEST(Cox, PermutedCovariateNotSignificant) {
    const auto base = two_group_data(300, 3.0, 21);
    Rng rng(5);
    std::vector<double> ps;
    for (int k = 0; k < 50; ++k) {
        auto d = base;
        std::vector<double> col(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) col[i] = d.covariates(i, 0);
        rng.shuffle(col.begin(), col.end());
        for (std::size_t i = 0; i < d.size(); ++i) d.covariates(i, 0) = col[i];
        ps.push_back(fit_cox(d).coefficients[0].p_value);
    }
    EXPECT_GT(median_of(ps), 0.05);
}

TEST(Cox, MaximumIsLocal) {
    auto d = two_group_data(300, 2.0, 8);
    Rng rng(3);
    Matrix x(d.size(), 2);
    for (std::size_t i = 0; i < d.size(); ++i) {
        x(i, 0) = d.covariates(i, 0);
        x(i, 1) = rng.normal();
    }
    d.covariates = x;
    d.covariate_names = {"g", "noise"};
    const auto m = fit_cox(d);
    const auto b = m.beta();
    for (std::size_t j = 0; j < 2; ++j)
        for (double h : {-0.01, 0.01}) {
            auto bb = b;
            bb[j] += h;
            EXPECT_LE(cox_partial_log_likelihood(d, bb), m.log_likelihood + 1e-9);
        }
}

TEST(Cox, NullLikelihoodWithoutTies) {
    SurvivalDataset d;
    d.covariates = Matrix(6, 1);
    const std::vector<double> t{5, 1, 4, 2, 6, 3};
    const std::vector<int> e{1, 1, 0, 1, 1, 0};
    const std::vector<double> x{1, 0, 0, 1, 0, 1};
    for (std::size_t i = 0; i < 6; ++i) {
        d.time.push_back(t[i]);
        d.event.push_back(e[i]);
        d.covariates(i, 0) = x[i];
    }
    // risk-set sizes at the event times 1, 2, 5, 6
    const double expected = -(std::log(6.0) + std::log(5.0) + std::log(2.0) + std::log(1.0));
    const std::vector<double> zero{0.0};
    EXPECT_NEAR(cox_partial_log_likelihood(d, zero), expected, 1e-12);
    EXPECT_NEAR(fit_cox(d).null_log_likelihood, expected, 1e-12);
}

TEST(Cox, CovariateScaling) {
    auto d = two_group_data(400, 2.0, 13);
    Rng rng(1);
    for (std::size_t i = 0; i < d.size(); ++i) d.covariates(i, 0) += 0.3 * rng.normal();
    const auto m1 = fit_cox(d);
    for (const double c : {7.5, 0.01}) {
        auto scaled = d;
        for (std::size_t i = 0; i < d.size(); ++i) scaled.covariates(i, 0) *= c;
        const auto m2 = fit_cox(scaled);
        EXPECT_TRUE(m2.converged);
        EXPECT_NEAR(m2.coefficients[0].beta * c, m1.coefficients[0].beta, 1e-6);
        EXPECT_NEAR(m2.log_likelihood, m1.log_likelihood, 1e-8);
        EXPECT_NEAR(m2.c_index, m1.c_index, 1e-12);
        EXPECT_NEAR(m2.coefficients[0].p_value, m1.coefficients[0].p_value, 1e-6);
    }
}

TEST(Cox, PerfectSeparation) {
    SurvivalDataset d;
    d.covariates = Matrix(10, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        d.time.push_back(static_cast<double>(i + 1));
        d.event.push_back(1);
        d.covariates(i, 0) = i < 5 ? 1.0 : 0.0;
    }
    EXPECT_CODE(fit_cox(d), ErrorCode::NonConvergence);
}

TEST(Cox, InputErrors) {
    SurvivalDataset d{{0, 1, 2}, {1, 1, 0}, Matrix(3, 1), {}, {}};
    EXPECT_CODE(fit_cox(d), ErrorCode::InvalidArgument);
    d.time = {1, 2, 3};
    d.event = {0, 0, 0};
    EXPECT_CODE(fit_cox(d), ErrorCode::EmptyInput);
    d.covariates = Matrix();
    EXPECT_CODE(fit_cox(d), ErrorCode::InvalidArgument);
}

TEST(Concordance, PerfectOrdering) {
    const std::vector<double> t{1, 2, 3, 4};
    const std::vector<int> e{1, 1, 1, 1};
    const std::vector<double> s{4, 3, 2, 1};
    const auto r = concordance_index(s, t, e);
    EXPECT_DOUBLE_EQ(r.c_index, 1.0);
    EXPECT_EQ(r.usable_pairs, 6u);
    const std::vector<double> rev{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(concordance_index(rev, t, e).c_index, 0.0);
}

TEST(Concordance, RandomScoresNearHalf) {
    Rng rng(42);
    std::vector<double> s, t;
    std::vector<int> e;
    for (int i = 0; i < 1000; ++i) {
        s.push_back(rng.uniform());
        t.push_back(rng.exponential(0.1));
        e.push_back(rng.bernoulli(0.7) ? 1 : 0);
    }
    const double c = concordance_index(s, t, e).c_index;
    EXPECT_GE(c, 0.45);
    EXPECT_LE(c, 0.55);
}

TEST(Concordance, AllCensored) {
    const std::vector<double> t{1, 2, 3};
    const std::vector<int> e{0, 0, 0};
    const std::vector<double> s{1, 2, 3};
    EXPECT_CODE(concordance_index(s, t, e), ErrorCode::NoUsablePairs);
}

TEST(RiskGroups, Boundaries) {
    const std::vector<double> s{-5, 0, 0.5, 1, 2};
    const auto g = risk_group_stratification(s, 0.0, 1.0);
    EXPECT_EQ(g[0], RiskGroup::low);
    EXPECT_EQ(g[1], RiskGroup::medium);
    EXPECT_EQ(g[2], RiskGroup::medium);
    EXPECT_EQ(g[3], RiskGroup::high);
    EXPECT_EQ(g[4], RiskGroup::high);
    const auto all_low = risk_group_stratification(std::vector<double>{1, 2}, 10, 20);
    for (auto x : all_low) EXPECT_EQ(x, RiskGroup::low);
    EXPECT_CODE(risk_group_stratification(s, 2.0, 1.0), ErrorCode::InvalidArgument);
}

TEST(RiskGroups, TertileSizes) {
    Rng rng(197);
    std::vector<double> s;
    for (int i = 0; i < 197; ++i) s.push_back(rng.normal());
    const auto [lo, hi] = tertile_cutoffs(s);
    const auto g = risk_group_stratification(s, lo, hi);
    const auto count = [&](RiskGroup r) { return std::count(g.begin(), g.end(), r); };
    EXPECT_NEAR(count(RiskGroup::low), 65, 1);
    EXPECT_NEAR(count(RiskGroup::medium), 65, 1);
    EXPECT_NEAR(count(RiskGroup::high), 67, 1);
}
