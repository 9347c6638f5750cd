#pragma once

#include <map>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/models/lasso.hpp"
#include "crlm/models/trees.hpp"

namespace crlm {

using BaseModel = std::variant<LassoLogisticModel, TreeEnsembleModel>;

struct VotingEnsemble {
    std::vector<BaseModel> members;
    std::vector<double> weights;  // normalized to sum 1
};

using TrainedModel = std::variant<LassoLogisticModel, TreeEnsembleModel, VotingEnsemble>;

inline double predict_proba(const BaseModel& m, std::span<const double> x) {
    return std::visit([&](const auto& v) { return v.predict_proba(x); }, m);
}

inline double predict_proba(const VotingEnsemble& e, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.members.size(); ++k)
        if (e.weights[k] != 0.0) s += e.weights[k] * predict_proba(e.members[k], x);
    return s;
}

inline double predict_proba(const TrainedModel& m, std::span<const double> x) {
    return std::visit(
        [&](const auto& v) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, VotingEnsemble>) return predict_proba(v, x);
            else return v.predict_proba(x);
        },
        m);
}

template <typename M>
std::vector<double> predict_all(const M& m, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(m, x.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Model specs

enum class ModelType { lasso, random_forest, gradient_boosting, voting };

inline std::string to_string(ModelType t) {
    switch (t) {
        case ModelType::lasso: return "lasso";
        case ModelType::random_forest: return "random_forest";
        case ModelType::gradient_boosting: return "gradient_boosting";
        case ModelType::voting: return "voting";
    }
    return "lasso";
}

inline ModelType parse_model_type(const std::string& s) {
    if (s == "lasso") return ModelType::lasso;
    if (s == "random_forest") return ModelType::random_forest;
    if (s == "gradient_boosting") return ModelType::gradient_boosting;
    if (s == "voting") return ModelType::voting;
    throw Error(ErrorCode::ParseError, "unknown model type '" + s + "'");
}

struct ModelSpec {
    ModelType type = ModelType::voting;
    LassoParams lasso;
    ForestParams forest;
    BoostingParams boosting;
    std::vector<ModelSpec> members;  // voting only; members may not be voting
    std::vector<double> weights;     // empty = equal

    static ModelSpec make_lasso(LassoParams p = {}) { return {ModelType::lasso, p, {}, {}, {}, {}}; }
    static ModelSpec make_forest(ForestParams p = {}) { return {ModelType::random_forest, {}, p, {}, {}, {}}; }
    static ModelSpec make_boosting(BoostingParams p = {}) { return {ModelType::gradient_boosting, {}, {}, p, {}, {}}; }
    static ModelSpec make_voting(std::vector<ModelSpec> members, std::vector<double> weights = {}) {
        return {ModelType::voting, {}, {}, {}, std::move(members), std::move(weights)};
    }
};

// Random forest + gradient boosting + LASSO, equal soft-voting weights.
inline ModelSpec default_model_spec() {
    return ModelSpec::make_voting({ModelSpec::make_forest(), ModelSpec::make_boosting(), ModelSpec::make_lasso()});
}

inline nlohmann::json model_spec_to_json(const ModelSpec& s) {
    nlohmann::json j;
    j["type"] = to_string(s.type);
    switch (s.type) {
        case ModelType::lasso:
            if (s.lasso.lambda) j["lambda"] = *s.lasso.lambda;
            j["tol"] = s.lasso.tol;
            j["max_iter"] = s.lasso.max_iter;
            j["n_lambdas"] = s.lasso.n_lambdas;
            j["decades"] = s.lasso.decades;
            j["cv_folds"] = s.lasso.cv_folds;
            break;
        case ModelType::random_forest:
            j["n_trees"] = s.forest.n_trees;
            j["max_depth"] = s.forest.max_depth;
            j["min_samples_leaf"] = s.forest.min_samples_leaf;
            j["max_features"] = s.forest.max_features;
            j["subsample_features"] = s.forest.subsample_features;
            j["bootstrap"] = s.forest.bootstrap;
            break;
        case ModelType::gradient_boosting:
            j["n_trees"] = s.boosting.n_trees;
            j["learning_rate"] = s.boosting.learning_rate;
            j["max_depth"] = s.boosting.max_depth;
            j["min_samples_leaf"] = s.boosting.min_samples_leaf;
            break;
        case ModelType::voting:
            j["members"] = nlohmann::json::array();
            for (const auto& m : s.members) j["members"].push_back(model_spec_to_json(m));
            if (!s.weights.empty()) j["weights"] = s.weights;
            break;
    }
    return j;
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
    try {
        ModelSpec s;
        s.type = parse_model_type(j.at("type").get<std::string>());
        switch (s.type) {
            case ModelType::lasso:
                if (j.contains("lambda") && !j["lambda"].is_null()) s.lasso.lambda = j["lambda"].get<double>();
                s.lasso.tol = j.value("tol", s.lasso.tol);
                s.lasso.max_iter = j.value("max_iter", s.lasso.max_iter);
                s.lasso.n_lambdas = j.value("n_lambdas", s.lasso.n_lambdas);
                s.lasso.decades = j.value("decades", s.lasso.decades);
                s.lasso.cv_folds = j.value("cv_folds", s.lasso.cv_folds);
                break;
            case ModelType::random_forest:
                s.forest.n_trees = j.value("n_trees", s.forest.n_trees);
                s.forest.max_depth = j.value("max_depth", s.forest.max_depth);
                s.forest.min_samples_leaf = j.value("min_samples_leaf", s.forest.min_samples_leaf);
                s.forest.max_features = j.value("max_features", s.forest.max_features);
                s.forest.subsample_features = j.value("subsample_features", s.forest.subsample_features);
                s.forest.bootstrap = j.value("bootstrap", s.forest.bootstrap);
                break;
            case ModelType::gradient_boosting:
                s.boosting.n_trees = j.value("n_trees", s.boosting.n_trees);
                s.boosting.learning_rate = j.value("learning_rate", s.boosting.learning_rate);
                s.boosting.max_depth = j.value("max_depth", s.boosting.max_depth);
                s.boosting.min_samples_leaf = j.value("min_samples_leaf", s.boosting.min_samples_leaf);
                break;
            case ModelType::voting:
                for (const auto& m : j.at("members")) s.members.push_back(model_spec_from_json(m));
                if (j.contains("weights")) s.weights = j["weights"].get<std::vector<double>>();
                break;
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model spec: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Fitting

inline std::vector<double> normalized_weights(const std::vector<double>& w, std::size_t n_members) {
    if (w.empty()) return std::vector<double>(n_members, 1.0 / static_cast<double>(n_members));
    require(w.size() == n_members, ErrorCode::InvalidArgument,
            "voting weights: " + std::to_string(w.size()) + " weights for " + std::to_string(n_members) + " members");
    double total = 0.0;
    for (double v : w) {
        require(v >= 0 && std::isfinite(v), ErrorCode::InvalidArgument, "voting weights must be nonnegative");
        total += v;
    }
    require(total > 0, ErrorCode::InvalidArgument, "voting weights sum to zero");
    std::vector<double> out(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) out[k] = w[k] / total;
    return out;
}

inline BaseModel fit_base_model(const ModelSpec& spec, const Matrix& x, std::span<const int> y, std::uint64_t seed) {
    switch (spec.type) {
        case ModelType::lasso: return fit_lasso_cv(x, y, spec.lasso, seed);
        case ModelType::random_forest: return fit_random_forest(x, y, spec.forest, seed);
        case ModelType::gradient_boosting: return fit_gradient_boosting(x, y, spec.boosting, seed);
        case ModelType::voting: break;
    }
    throw Error(ErrorCode::InvalidArgument, "voting ensembles cannot be nested");
}

inline VotingEnsemble fit_voting_ensemble(const Matrix& x, std::span<const int> y, const std::vector<ModelSpec>& members,
                                          const std::vector<double>& weights, std::uint64_t seed) {
    require(!members.empty(), ErrorCode::InvalidArgument, "voting ensemble needs at least one member");
    VotingEnsemble e;
    e.weights = normalized_weights(weights, members.size());
    for (std::size_t k = 0; k < members.size(); ++k) e.members.push_back(fit_base_model(members[k], x, y, derive_seed(seed, k)));
    return e;
}

inline TrainedModel fit_model(const ModelSpec& spec, const Matrix& x, std::span<const int> y, std::uint64_t seed) {
    if (spec.type == ModelType::voting) return fit_voting_ensemble(x, y, spec.members, spec.weights, seed);
    return std::visit([](auto&& m) -> TrainedModel { return std::move(m); }, fit_base_model(spec, x, y, seed));
}

// One independent classifier per horizon, all on the same rows.
struct MultiHorizonModel {
    std::map<int, TrainedModel> models;  // horizon months -> model

    std::vector<double> predict(std::span<const double> x) const {
        std::vector<double> out;
        for (const auto& [h, m] : models) out.push_back(predict_proba(m, x));
        return out;
    }
};

inline MultiHorizonModel fit_multi_horizon(const Matrix& x, const std::map<int, std::vector<int>>& labels_by_horizon,
                                           const ModelSpec& spec, std::uint64_t seed) {
    require(!labels_by_horizon.empty(), ErrorCode::InvalidArgument, "no horizons given");
    MultiHorizonModel mh;
    for (const auto& [h, y] : labels_by_horizon) {
        require(y.size() == x.rows(), ErrorCode::DimensionMismatch,
                "labels for horizon " + std::to_string(h) + " do not align with X");
        try {
            mh.models.emplace(h, fit_model(spec, x, y, seed));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingleClass) throw;
            throw Error(ErrorCode::SingleClass, "horizon " + std::to_string(h) + "m: " + e.message());
        }
    }
    return mh;
}

// ---------------------------------------------------------------------------
// Feature importance

struct FeatureImportanceReport {
    std::vector<std::pair<std::string, double>> ranked;  // descending

    double cumulative(std::size_t k) const {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) s += ranked[i].second;
        return s;
    }
    double of(const std::string& name) const {
        for (const auto& [n, v] : ranked)
            if (n == name) return v;
        return 0.0;
    }
};

inline std::vector<double> normalize_sum(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    if (s > 0)
        for (double& x : v) x /= s;
    return v;
}

inline std::vector<double> raw_importance(const LassoLogisticModel& m) {
    std::vector<double> v(m.coefficients.size());
    for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = std::fabs(m.coefficients[j]) * (j < m.feature_sd.size() ? m.feature_sd[j] : 1.0);
    return normalize_sum(std::move(v));
}

inline std::vector<double> raw_importance(const TreeEnsembleModel& m) { return normalize_sum(m.split_gain); }

inline std::vector<double> raw_importance(const BaseModel& m) {
    return std::visit([](const auto& v) { return raw_importance(v); }, m);
}

inline std::vector<double> raw_importance(const VotingEnsemble& e) {
    std::vector<double> total;
    for (std::size_t k = 0; k < e.members.size(); ++k) {
        const auto v = raw_importance(e.members[k]);
        total.resize(v.size(), 0.0);
        for (std::size_t j = 0; j < v.size(); ++j) total[j] += e.weights[k] * v[j];
    }
    return normalize_sum(std::move(total));
}

inline std::vector<double> raw_importance(const TrainedModel& m) {
    return std::visit([](const auto& v) { return raw_importance(v); }, m);
}

inline FeatureImportanceReport feature_importance(const TrainedModel& m, const std::vector<std::string>& names) {
    const auto v = raw_importance(m);
    require(v.size() == names.size(), ErrorCode::DimensionMismatch,
            "feature_importance: model has " + std::to_string(v.size()) + " inputs, " + std::to_string(names.size()) +
                " names given");
    FeatureImportanceReport r;
    for (std::size_t j = 0; j < v.size(); ++j) r.ranked.emplace_back(names[j], v[j]);
    std::stable_sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return r;
}

// ---------------------------------------------------------------------------
// Serialization: versioned JSON, trees as nested nodes.

inline constexpr int model_format_version = 1;

namespace detail {

inline nlohmann::json node_json(const Tree& t, int k) {
    const auto& n = t.nodes[static_cast<std::size_t>(k)];
    if (n.feature < 0) return {{"value", n.value}, {"weight", n.weight}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"weight", n.weight},
            {"value", n.value},
            {"left", node_json(t, n.left)},
            {"right", node_json(t, n.right)}};
}

inline int node_from_json(Tree& t, const nlohmann::json& j, int depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    TreeNode n;
    n.value = j.at("value").get<double>();
    n.weight = j.value("weight", 0.0);
    n.depth = depth;
    if (j.contains("feature")) {
        n.feature = j["feature"].get<int>();
        n.threshold = j.at("threshold").get<double>();
        n.left = node_from_json(t, j.at("left"), depth + 1);
        n.right = node_from_json(t, j.at("right"), depth + 1);
    }
    t.nodes[static_cast<std::size_t>(id)] = n;
    return id;
}

inline nlohmann::json base_json(const LassoLogisticModel& m) {
    nlohmann::json j{{"type", "lasso"},
                     {"intercept", m.intercept},
                     {"coefficients", m.coefficients},
                     {"lambda", m.lambda},
                     {"feature_sd", m.feature_sd},
                     {"convergence",
                      {{"iterations", m.convergence.iterations},
                       {"max_delta", m.convergence.max_delta},
                       {"converged", m.convergence.converged}}}};
    if (!m.lambda_grid.empty()) {
        j["lambda_grid"] = m.lambda_grid;
        nlohmann::json aucs = nlohmann::json::array();
        for (double a : m.cv_auc) aucs.push_back(std::isnan(a) ? nlohmann::json() : nlohmann::json(a));
        j["cv_auc"] = aucs;
    }
    return j;
}

inline nlohmann::json base_json(const TreeEnsembleModel& m) {
    nlohmann::json j{{"type", m.mode == EnsembleMode::bagging ? "random_forest" : "gradient_boosting"},
                     {"init", m.init},
                     {"learning_rate", m.learning_rate},
                     {"max_depth", m.max_depth},
                     {"min_samples_leaf", m.min_samples_leaf},
                     {"max_features", m.max_features},
                     {"bootstrap", m.bootstrap},
                     {"seed", m.seed},
                     {"n_features", m.n_features},
                     {"split_gain", m.split_gain}};
    if (m.oob_accuracy) j["oob_accuracy"] = *m.oob_accuracy;
    j["trees"] = nlohmann::json::array();
    for (const auto& t : m.trees) j["trees"].push_back(node_json(t, 0));
    return j;
}

inline BaseModel base_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "lasso") {
        LassoLogisticModel m;
        m.intercept = j.at("intercept").get<double>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        m.lambda = j.at("lambda").get<double>();
        m.feature_sd = j.value("feature_sd", std::vector<double>{});
        const auto& c = j.at("convergence");
        m.convergence = {c.at("iterations").get<std::size_t>(), c.at("max_delta").get<double>(),
                         c.at("converged").get<bool>()};
        if (j.contains("lambda_grid")) {
            m.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
            for (const auto& a : j.at("cv_auc"))
                m.cv_auc.push_back(a.is_null() ? std::numeric_limits<double>::quiet_NaN() : a.get<double>());
        }
        return m;
    }
    require(type == "random_forest" || type == "gradient_boosting", ErrorCode::ParseError,
            "unknown model type '" + type + "'");
    TreeEnsembleModel m;
    m.mode = type == "random_forest" ? EnsembleMode::bagging : EnsembleMode::boosting;
    m.init = j.at("init").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.max_depth = j.at("max_depth").get<int>();
    m.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    m.max_features = j.at("max_features").get<std::size_t>();
    m.bootstrap = j.at("bootstrap").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.split_gain = j.at("split_gain").get<std::vector<double>>();
    if (j.contains("oob_accuracy")) m.oob_accuracy = j["oob_accuracy"].get<double>();
    for (const auto& tj : j.at("trees")) {
        Tree t;
        node_from_json(t, tj, 0);
        m.trees.push_back(std::move(t));
    }
    return m;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json body = std::visit(
        [](const auto& v) -> nlohmann::json {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, VotingEnsemble>) {
                nlohmann::json j{{"type", "voting"}, {"weights", v.weights}, {"members", nlohmann::json::array()}};
                for (const auto& mem : v.members)
                    j["members"].push_back(std::visit([](const auto& b) { return detail::base_json(b); }, mem));
                return j;
            } else {
                return detail::base_json(v);
            }
        },
        m);
    return {{"format", "crlm-model"}, {"version", model_format_version}, {"model", body}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        require(j.value("format", "") == "crlm-model", ErrorCode::ParseError, "not a crlm-model document");
        require(j.value("version", 0) == model_format_version, ErrorCode::ParseError, "unsupported model version");
        const auto& body = j.at("model");
        if (body.at("type").get<std::string>() == "voting") {
            VotingEnsemble e;
            e.weights = body.at("weights").get<std::vector<double>>();
            for (const auto& mj : body.at("members")) e.members.push_back(detail::base_from_json(mj));
            return e;
        }
        return std::visit([](auto&& b) -> TrainedModel { return std::move(b); }, detail::base_from_json(body));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
    }
}

}  // namespace crlm
