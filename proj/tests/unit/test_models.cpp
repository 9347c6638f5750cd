#include <gtest/gtest.h>

#include <cmath>

#include "crlm/core/rng.hpp"
#include "crlm/models/model.hpp"
#include "test_util.hpp"

using namespace crlm;

namespace {

struct Data {
    Matrix x;
    std::vector<int> y;
};

Data make_data(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    Data d{Matrix(n, p), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0;
        for (std::size_t j = 0; j < p; ++j) {
            d.x(i, j) = rng.normal();
            eta += (j == 0 ? 1.5 : 0.3) * d.x(i, j);
        }
        d.y[i] = rng.bernoulli(numeric::logistic(eta)) ? 1 : 0;
    }
    return d;
}

LassoLogisticModel constant_model(double p, std::size_t n_features) {
    LassoLogisticModel m;
    m.coefficients.assign(n_features, 0.0);
    m.intercept = numeric::logit(p);
    m.feature_sd.assign(n_features, 1.0);
    return m;
}

ModelSpec small_spec() {
    ForestParams fp;
    fp.n_trees = 15;
    BoostingParams bp;
    bp.n_trees = 15;
    LassoParams lp;
    lp.n_lambdas = 8;
    return ModelSpec::make_voting({ModelSpec::make_forest(fp), ModelSpec::make_boosting(bp), ModelSpec::make_lasso(lp)});
}

}  // namespace

TEST(Voting, TwoMembersAverage) {
    VotingEnsemble e{{constant_model(0.2, 1), constant_model(0.8, 1)}, {0.5, 0.5}};
    const std::vector<double> x = {3.0};
    EXPECT_NEAR(predict_proba(TrainedModel{e}, x), 0.5, 1e-15);
}

TEST(Voting, WeightOneZeroIsFirstMember) {
    const auto d = make_data(80, 3, 1);
    const auto spec = ModelSpec::make_voting({ModelSpec::make_forest({20}), ModelSpec::make_boosting({20})}, {1, 0});
    const auto e = std::get<VotingEnsemble>(fit_model(spec, d.x, d.y, 4));
    for (std::size_t i = 0; i < d.x.rows(); ++i)
        EXPECT_EQ(predict_proba(TrainedModel{e}, d.x.row(i)), predict_proba(e.members[0], d.x.row(i)));
}

TEST(Voting, SingleMemberIdentity) {
    const auto d = make_data(80, 3, 2);
    const auto member = ModelSpec::make_forest({25});
    const auto e = std::get<VotingEnsemble>(fit_model(ModelSpec::make_voting({member}), d.x, d.y, 5));
    // members are seeded with derive_seed(seed, k)
    const auto ref = fit_model(member, d.x, d.y, derive_seed(5, 0));
    for (std::size_t i = 0; i < d.x.rows(); ++i)
        EXPECT_EQ(predict_proba(TrainedModel{e}, d.x.row(i)), predict_proba(ref, d.x.row(i)));
}

TEST(Voting, OutputIsWeightedMeanOfMembers) {
    const auto d = make_data(100, 4, 3);
    const auto spec = ModelSpec::make_voting(small_spec().members, {2, 1, 1});
    const auto e = std::get<VotingEnsemble>(fit_model(spec, d.x, d.y, 6));
    EXPECT_DOUBLE_EQ(e.weights[0], 0.5);
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
        double s = 0;
        for (std::size_t k = 0; k < 3; ++k) s += e.weights[k] * predict_proba(e.members[k], d.x.row(i));
        const double p = predict_proba(TrainedModel{e}, d.x.row(i));
        EXPECT_EQ(p, s);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(Voting, BadWeights) {
    const auto d = make_data(40, 2, 4);
    const auto members = small_spec().members;
    EXPECT_CODE(fit_model(ModelSpec::make_voting(members, {1, -1, 1}), d.x, d.y, 1), ErrorCode::InvalidArgument);
    EXPECT_CODE(fit_model(ModelSpec::make_voting(members, {0, 0, 0}), d.x, d.y, 1), ErrorCode::InvalidArgument);
    EXPECT_CODE(fit_model(ModelSpec::make_voting({}), d.x, d.y, 1), ErrorCode::InvalidArgument);
}

TEST(Models, FixedSeedIsBitReproducible) {
    const auto d = make_data(120, 5, 5);
    const auto a = fit_model(default_model_spec(), d.x, d.y, 11);
    const auto b = fit_model(default_model_spec(), d.x, d.y, 11);
    EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
    EXPECT_EQ(predict_all(a, d.x), predict_all(b, d.x));
}

TEST(Models, JsonRoundTripPredictsIdentically) {
    const auto d = make_data(90, 4, 6);
    const auto m = fit_model(small_spec(), d.x, d.y, 2);
    const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
    EXPECT_EQ(predict_all(m, d.x), predict_all(back, d.x));
}

TEST(Models, SpecJsonRoundTrip) {
    const auto spec = small_spec();
    const auto back = model_spec_from_json(model_spec_to_json(spec));
    EXPECT_EQ(model_spec_to_json(back).dump(), model_spec_to_json(spec).dump());
    EXPECT_CODE(model_spec_from_json(nlohmann::json::parse(R"({"type":"svm"})")), ErrorCode::ParseError);
}

TEST(MultiHorizon, IdenticalLabelsGiveIdenticalModels) {
    const auto d = make_data(100, 3, 7);
    const auto mh = fit_multi_horizon(d.x, {{3, d.y}, {6, d.y}, {12, d.y}}, small_spec(), 9);
    const auto j3 = model_to_json(mh.models.at(3)).dump();
    EXPECT_EQ(j3, model_to_json(mh.models.at(6)).dump());
    EXPECT_EQ(j3, model_to_json(mh.models.at(12)).dump());
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
        const auto triple = mh.predict(d.x.row(i));
        ASSERT_EQ(triple.size(), 3u);
        for (double p : triple) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
    }
}

TEST(MultiHorizon, SingleClassHorizonRejected) {
    const auto d = make_data(50, 2, 8);
    EXPECT_CODE(fit_multi_horizon(d.x, {{3, std::vector<int>(50, 0)}, {6, d.y}}, small_spec(), 1),
                ErrorCode::SingleClass);
}

TEST(Importance, SingleFeatureGetsEverything) {
    const auto d = make_data(80, 1, 9);
    const auto m = fit_model(ModelSpec::make_forest({10}), d.x, d.y, 1);
    const auto r = feature_importance(m, {"only"});
    ASSERT_EQ(r.ranked.size(), 1u);
    EXPECT_DOUBLE_EQ(r.ranked[0].second, 1.0);
}

TEST(Importance, ZeroLassoCoefficientHasZeroImportance) {
    auto m = constant_model(0.4, 3);
    m.coefficients = {0.5, 0.0, -1.0};
    m.feature_sd = {2.0, 5.0, 1.0};
    const auto r = feature_importance(TrainedModel{m}, {"a", "b", "c"});
    EXPECT_EQ(r.of("b"), 0.0);
    EXPECT_DOUBLE_EQ(r.of("a"), 0.5);
    EXPECT_DOUBLE_EQ(r.of("c"), 0.5);
}

TEST(Importance, TreeModelNormalizedAndDescending) {
    const auto d = make_data(150, 3, 10);
    for (const auto& spec : {ModelSpec::make_forest({30}), ModelSpec::make_boosting({30}), small_spec()}) {
        const auto r = feature_importance(fit_model(spec, d.x, d.y, 3), {"a", "b", "c"});
        EXPECT_NEAR(r.cumulative(3), 1.0, 1e-9);
        for (std::size_t i = 1; i < r.ranked.size(); ++i) EXPECT_GE(r.ranked[i - 1].second, r.ranked[i].second);
        for (const auto& [n, v] : r.ranked) EXPECT_GE(v, 0.0);
        EXPECT_EQ(r.ranked[0].first, "a");
    }
}
