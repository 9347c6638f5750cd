#include <gtest/gtest.h>

#include <cmath>

#include "crlm/core/rng.hpp"
#include "crlm/dca.hpp"
#include "crlm/synthetic.hpp"
#include "crlm/workflow.hpp"
#include "test_util.hpp"

using namespace crlm;

namespace {

struct Instance {
    std::vector<double> scores;
    std::vector<int> labels;
};

Instance random_instance(Rng& rng, std::size_t n) {
    Instance in;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i < 2 ? static_cast<int>(i) : (rng.bernoulli(0.35) ? 1 : 0);
        in.labels.push_back(y);
        // coarse scores so that some land exactly on grid thresholds
        in.scores.push_back(std::round((rng.uniform() * 0.7 + 0.3 * y) * 20) / 20);
    }
    return in;
}

}  // namespace

TEST(NetBenefit, NobodyTreated) {
    const std::vector<double> s{0.1, 0.2, 0.3, 0.1};
    const std::vector<int> y{1, 0, 1, 0};
    EXPECT_DOUBLE_EQ(net_benefit(s, y, 0.5), 0.0);
}

TEST(NetBenefit, EveryoneTreated) {
    std::vector<double> s(10, 0.9);
    std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    EXPECT_NEAR(net_benefit(s, y, 0.5), -0.2, 1e-15);
}

TEST(NetBenefit, PerfectClassifierGivesPrevalence) {
    const std::vector<double> s{1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<int> y{1, 1, 1, 0, 0, 0, 0, 0};
    for (double pt : default_pt_grid()) EXPECT_NEAR(net_benefit(s, y, pt), 3.0 / 8, 1e-15) << pt;
}

TEST(NetBenefit, ThresholdOutsideUnitInterval) {
    const std::vector<double> s{0.2, 0.8};
    const std::vector<int> y{0, 1};
    for (double pt : {0.0, 1.0, -0.1, 1.5}) EXPECT_CODE(net_benefit(s, y, pt), ErrorCode::InvalidArgument);
}

TEST(NetBenefit, MatchesConfusionOracle) {
    Rng rng(31);
    for (int k = 0; k < 300; ++k) {
        const auto in = random_instance(rng, 5 + rng.index(150));
        const double n = static_cast<double>(in.scores.size());
        for (double pt : default_pt_grid()) {
            double tp = 0, fp = 0;
            for (std::size_t i = 0; i < in.scores.size(); ++i)
                if (in.scores[i] >= pt) (in.labels[i] ? tp : fp) += 1;
            EXPECT_NEAR(net_benefit(in.scores, in.labels, pt), tp / n - fp / n * pt / (1 - pt), 1e-12);
            const auto eff = treatment_efficiency(in.scores, in.labels, pt);
            if (tp + fp == 0) {
                EXPECT_FALSE(eff.efficiency.has_value());
            } else {
                // efficiency is the PPV at the same threshold
                const auto m = threshold_metrics(in.scores, in.labels, pt);
                ASSERT_TRUE(m.ppv.has_value());
                EXPECT_DOUBLE_EQ(*eff.efficiency, *m.ppv);
            }
        }
    }
}

TEST(DecisionCurve, ReferenceCurves) {
    Rng rng(4);
    const auto in = random_instance(rng, 400);
    const auto dc = decision_curve(in.scores, in.labels, default_pt_grid());
    ASSERT_EQ(dc.thresholds.size(), 19u);
    for (std::size_t i = 0; i < dc.thresholds.size(); ++i) {
        EXPECT_EQ(dc.net_benefit_treat_none[i], 0.0);
        EXPECT_LE(dc.net_benefit_model[i], dc.prevalence + 1e-15);
        const double pt = dc.thresholds[i];
        EXPECT_NEAR(dc.net_benefit_treat_all[i], dc.prevalence - (1 - dc.prevalence) * pt / (1 - pt), 1e-15);
        if (i > 0) EXPECT_LT(dc.net_benefit_treat_all[i], dc.net_benefit_treat_all[i - 1]);
    }
}

TEST(DecisionCurve, TreatAllCrossesZeroAtPrevalence) {
    for (double p : {0.1, 0.25, 0.34, 0.5, 0.77}) EXPECT_NEAR(treat_all_net_benefit(p, p), 0.0, 1e-12) << p;
}

TEST(DecisionCurve, GridErrors) {
    const std::vector<double> s{0.2, 0.8};
    const std::vector<int> y{0, 1};
    EXPECT_CODE(decision_curve(s, y, std::vector<double>{}), ErrorCode::EmptyInput);
    EXPECT_CODE(decision_curve(s, y, std::vector<double>{0.5, 0.3}), ErrorCode::InvalidArgument);
    EXPECT_CODE(decision_curve(s, y, std::vector<double>{0.0, 0.3}), ErrorCode::InvalidArgument);
    EXPECT_EQ(pt_grid(0.2, 0.9, 0.1).size(), 8u);
}

TEST(DecisionCurve, PlantedModelBeatsTreatAllAtHighThresholds) {
    const auto cohort = generate_synthetic_cohort(800, 12, PlantedSignal::metabolic);
    TrainEvalConfig cfg;
    cfg.horizons = {3};
    cfg.model = ModelSpec::make_lasso();
    cfg.bootstrap_iterations = 100;
    cfg.diagnostic_audit = false;
    const auto r = train_eval(cohort, cfg, 12);
    const auto& h = r.horizons.at(0);
    const auto dc = decision_curve(h.test_scores, h.test_labels, default_pt_grid());
    for (std::size_t i = 0; i < dc.thresholds.size(); ++i)
        if (dc.thresholds[i] >= 0.5 - 1e-12) EXPECT_GE(dc.net_benefit_model[i], dc.net_benefit_treat_all[i]) << dc.thresholds[i];
}

TEST(TreatmentEfficiency, PublishedCounts) {
    const auto e = treatment_efficiency(35, 15, 1000);
    EXPECT_DOUBLE_EQ(e.treated_per_1000, 50.0);
    EXPECT_DOUBLE_EQ(e.beneficial_per_1000, 35.0);
    EXPECT_DOUBLE_EQ(e.unnecessary_per_1000, 15.0);
    ASSERT_TRUE(e.efficiency.has_value());
    EXPECT_EQ(*e.efficiency, 0.70);
}

TEST(TreatmentEfficiency, PerfectAndEmpty) {
    const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
    const std::vector<int> y{1, 1, 0, 0};
    EXPECT_EQ(treatment_efficiency(s, y, 0.5).efficiency.value(), 1.0);
    EXPECT_FALSE(treatment_efficiency(s, y, 0.95).efficiency.has_value());
    EXPECT_CODE(treatment_efficiency(5, 6, 10), ErrorCode::InvalidArgument);
}

TEST(DecisionCurve, CsvShape) {
    const std::vector<double> s{0.9, 0.8, 0.1, 0.2};
    const std::vector<int> y{1, 1, 0, 0};
    const auto csv = decision_curve_csv(decision_curve(s, y, default_pt_grid()));
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    EXPECT_GE(lines, 20u);
    EXPECT_NE(csv.find("pt"), std::string::npos);
}
