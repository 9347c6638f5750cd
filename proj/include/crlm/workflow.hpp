#pragma once

// End-to-end train/evaluate workflow: missingness filter, baseline-only gate,
// stratified split, preprocessing fitted on the training rows, SMOTE, fit per
// horizon, discrimination metrics with bootstrap CIs, and the leakage audit.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/eval/audit.hpp"
#include "crlm/eval/bootstrap.hpp"
#include "crlm/eval/cv.hpp"
#include "crlm/eval/roc.hpp"
#include "crlm/models/model.hpp"
#include "crlm/preprocess.hpp"
#include "crlm/survival/concordance.hpp"
#include "crlm/survival/cox.hpp"
#include "crlm/survival/kaplan_meier.hpp"

namespace crlm {

struct TrainEvalConfig {
    std::vector<double> horizons{3, 6, 12};
    double missingness_threshold = 0.30;
    double train_fraction = 0.7;
    bool smote = true;
    std::size_t smote_k = 5;
    ModelSpec model = default_model_spec();
    std::size_t bootstrap_iterations = 1000;
    double decision_threshold = 0.5;
    double importance_threshold = 0.5;
    bool include_postop = false;     // keep postoperative and outcome columns (diagnostic)
    bool diagnostic_audit = true;    // also report an all-columns diagnostic fit
    std::size_t cv_folds = 0;        // 0 skips cross-validation
};

struct HorizonReport {
    double horizon = 3;
    std::size_t n_train = 0, n_test = 0;
    std::size_t n_train_positive = 0, n_test_positive = 0;
    RocResult roc;
    BootstrapCI ci;
    ThresholdMetrics at_threshold;
    std::optional<CvResult> cv;
    FeatureImportanceReport importance;
    LeakageAuditReport audit;
    std::optional<LeakageAuditReport> unfiltered;  // all-columns diagnostic fit
    std::vector<std::string> test_ids;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
    PreprocessPipeline pipeline;
    TrainedModel model;
};

struct TrainEvalResult {
    std::vector<RemovedColumn> removed_missing;
    std::vector<RemovedByTag> removed_by_tag;
    std::vector<ColumnInfo> model_inputs;  // encoded design columns
    std::vector<HorizonReport> horizons;
};

// Adds the columns of a wide feature CSV (id, feature...) to a cohort as
// baseline radiomic variables. Patients without a row get missing values.
// An id-only file (every feature filtered out upstream) adds nothing.
inline Cohort with_feature_columns(const Cohort& cohort, const std::string& csv_text) {
    const auto rows = parse_csv_text(csv_text);
    require(!rows.empty() && !rows[0].empty() && rows[0][0] == "id", ErrorCode::ParseError,
            "feature CSV needs an 'id' first column");
    const auto& header = rows[0];
    std::vector<VariableSchema> schema = cohort.schema();
    for (std::size_t c = 1; c < header.size(); ++c) {
        require(cohort.find(header[c]) == nullptr, ErrorCode::InvalidArgument,
                "feature column '" + header[c] + "' already exists in the cohort");
        schema.push_back({header[c], VariableKind::continuous, TemporalTag::baseline, Provenance::radiomic, 0.0});
    }
    std::map<std::string, std::size_t> by_id;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require(rows[r].size() == header.size(), ErrorCode::ParseError, "feature CSV row " + std::to_string(r) + " is ragged");
        require(by_id.emplace(rows[r][0], r).second, ErrorCode::DuplicateId, "duplicate id '" + rows[r][0] + "' in feature CSV");
    }
    std::vector<PatientRecord> records = cohort.records();
    for (auto& rec : records) {
        const auto it = by_id.find(rec.id);
        for (std::size_t c = 1; c < header.size(); ++c) {
            Value v;
            if (it != by_id.end() && !is_missing_token(rows[it->second][c])) {
                const auto d = parse_double(rows[it->second][c]);
                require(d.has_value(), ErrorCode::ParseError, "feature '" + header[c] + "' for '" + rec.id + "' is not numeric");
                v = *d;
            }
            rec.variables[header[c]] = v;
        }
    }
    return Cohort(std::move(records), std::move(schema), cohort.has_outcomes());
}

inline std::string horizon_key(double h) { return format_double(h) + "m"; }

inline TrainEvalResult train_eval(const Cohort& cohort, const TrainEvalConfig& cfg, std::uint64_t seed) {
    require(!cfg.horizons.empty(), ErrorCode::InvalidArgument, "no horizons configured");
    const auto miss = drop_high_missingness(cohort, cfg.missingness_threshold);
    const FeatureTable full = FeatureTable::from_cohort(miss.cohort);
    TrainEvalResult res;
    res.removed_missing = miss.removed;
    FeatureTable used = full;
    if (!cfg.include_postop) {
        auto gate = baseline_only_filter(full);
        require(!gate.empty_result, ErrorCode::EmptyInput, "no baseline columns remain after filtering");
        res.removed_by_tag = gate.removed;
        used = std::move(gate.data);
    }

    for (double h : cfg.horizons) {
        const auto lab = make_horizon_labels(miss.cohort, h);
        HorizonReport hr;
        hr.horizon = h;
        Split split;
        try {
            split = stratified_split(lab.labels, cfg.train_fraction, seed);
        } catch (const Error& e) {
            throw Error(e.code(), "horizon " + horizon_key(h) + ": " + e.message());
        }
        std::vector<int> ytr, yte;
        for (auto i : split.train) ytr.push_back(lab.labels[i]);
        for (auto i : split.test) yte.push_back(lab.labels[i]);
        hr.n_train = ytr.size();
        hr.n_test = yte.size();
        hr.n_train_positive = static_cast<std::size_t>(std::count(ytr.begin(), ytr.end(), 1));
        hr.n_test_positive = static_cast<std::size_t>(std::count(yte.begin(), yte.end(), 1));

        hr.pipeline = PreprocessPipeline::fit(TableView(used, split.train));
        const FeatureMatrix xtr = hr.pipeline.transform(TableView(used, split.train));
        const FeatureMatrix xte = hr.pipeline.transform(TableView(used, split.test));
        if (res.model_inputs.empty()) res.model_inputs = xtr.columns;
        if (cfg.smote) {
            const auto sm = smote_oversample(xtr.values, ytr, cfg.smote_k, seed);
            hr.model = fit_model(cfg.model, sm.values, sm.labels, seed);
        } else {
            hr.model = fit_model(cfg.model, xtr.values, ytr, seed);
        }
        hr.test_ids = xte.ids;
        hr.test_scores = predict_all(hr.model, xte.values);
        hr.test_labels = yte;
        hr.roc = roc_auc(hr.test_scores, yte);
        hr.ci = bootstrap_auc(hr.test_scores, yte, cfg.bootstrap_iterations, derive_seed(seed, 0xb0075));
        hr.at_threshold = threshold_metrics(hr.test_scores, yte, cfg.decision_threshold);
        hr.importance = feature_importance(hr.model, xtr.names());

        if (cfg.cv_folds >= 2) {
            // CV runs on the training part only, so the test split stays untouched.
            std::vector<std::vector<Value>> cells(used.cols());
            for (std::size_t c = 0; c < used.cols(); ++c)
                for (auto i : split.train) cells[c].push_back(used.cell(i, c));
            const FeatureTable sub(xtr.ids, used.columns(), std::move(cells));
            hr.cv = cross_validate(sub, ytr, cfg.model, CvOptions{cfg.cv_folds, cfg.smote, cfg.smote_k}, seed);
        }

        // The verdict audits the matrix the model was given. The unfiltered
        // diagnostic shows what the gated columns would have contributed.
        hr.audit = leakage_audit(xtr.columns, xtr.columns, hr.importance, cfg.importance_threshold);
        if (!cfg.include_postop && cfg.diagnostic_audit) {
            const auto diag_pipe = PreprocessPipeline::fit(TableView(full, split.train));
            const FeatureMatrix diag = diag_pipe.transform(TableView(full, split.train));
            hr.unfiltered = run_leakage_audit(diag.columns, diag, ytr, cfg.model, derive_seed(seed, 0xa0d17),
                                              cfg.importance_threshold);
        }
        res.horizons.push_back(std::move(hr));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json threshold_metrics_json(const ThresholdMetrics& m) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"threshold", m.threshold},
            {"tp", m.confusion.tp},
            {"fp", m.confusion.fp},
            {"tn", m.confusion.tn},
            {"fn", m.confusion.fn},
            {"sensitivity", opt(m.sensitivity)},
            {"specificity", opt(m.specificity)},
            {"ppv", opt(m.ppv)},
            {"npv", opt(m.npv)}};
}

inline nlohmann::json evaluation_report_json(const TrainEvalResult& r, const TrainEvalConfig& cfg, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["include_postop"] = cfg.include_postop;
    j["n_model_inputs"] = r.model_inputs.size();
    j["removed_missingness"] = nlohmann::json::array();
    for (const auto& c : r.removed_missing) j["removed_missingness"].push_back(c.name);
    j["removed_by_tag"] = nlohmann::json::array();
    for (const auto& c : r.removed_by_tag)
        j["removed_by_tag"].push_back({{"name", c.name}, {"temporal_tag", to_string(c.temporal_tag)}});
    auto& hs = j["horizons"] = nlohmann::json::object();
    for (const auto& h : r.horizons) {
        nlohmann::json e;
        e["n_train"] = h.n_train;
        e["n_test"] = h.n_test;
        e["n_train_positive"] = h.n_train_positive;
        e["n_test_positive"] = h.n_test_positive;
        e["auc"] = h.roc.auc;
        e["auc_ci"] = {{"lower", h.ci.lower},
                       {"upper", h.ci.upper},
                       {"iterations", h.ci.n_iterations},
                       {"degenerate_resamples", h.ci.n_degenerate},
                       {"point_outside", h.ci.point_outside},
                       {"seed", h.ci.seed}};
        e["threshold_metrics"] = threshold_metrics_json(h.at_threshold);
        if (h.cv) {
            e["cv"] = {{"folds", h.cv->folds.size()},
                       {"folds_scored", h.cv->folds_scored},
                       {"mean_auc", h.cv->mean_auc},
                       {"sd_auc", h.cv->sd_auc},
                       {"test_rows_read_during_fit", h.cv->test_rows_read_during_fit()}};
            auto& f = e["cv"]["fold_auc"] = nlohmann::json::array();
            for (const auto& fold : h.cv->folds) f.push_back(std::isnan(fold.auc) ? nlohmann::json(nullptr) : nlohmann::json(fold.auc));
        }
        auto& imp = e["top_features"] = nlohmann::json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(10, h.importance.ranked.size()); ++i)
            imp.push_back({{"name", h.importance.ranked[i].first}, {"importance", h.importance.ranked[i].second}});
        e["top5_cumulative_importance"] = h.importance.cumulative(5);
        e["leakage_verdict"] = to_string(h.audit.verdict);
        hs[horizon_key(h.horizon)] = std::move(e);
    }
    return j;
}

inline std::string evaluation_report_text(const TrainEvalResult& r) {
    std::string out = "horizon  n_test  pos   AUC    95% CI         sens   spec   NPV    verdict\n";
    auto pct = [](const std::optional<double>& v) { return v ? format_fixed(*v, 3) : std::string("  n/a"); };
    for (const auto& h : r.horizons) {
        std::string key = horizon_key(h.horizon);
        key.resize(std::max<std::size_t>(key.size(), 9), ' ');
        std::string n = std::to_string(h.n_test);
        n.resize(8, ' ');
        std::string p = std::to_string(h.n_test_positive);
        p.resize(6, ' ');
        out += key + n + p + format_fixed(h.roc.auc, 3) + "  " + format_fixed(h.ci.lower, 3) + "-" +
               format_fixed(h.ci.upper, 3) + "    " + pct(h.at_threshold.sensitivity) + "  " +
               pct(h.at_threshold.specificity) + "  " + pct(h.at_threshold.npv) + "  " + to_string(h.audit.verdict) + "\n";
    }
    return out;
}

inline std::string test_scores_csv(const TrainEvalResult& r, const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "horizon,id,label,score\n";
    for (const auto& h : r.horizons)
        for (std::size_t i = 0; i < h.test_ids.size(); ++i)
            out += join_csv({format_double(h.horizon), h.test_ids[i], std::to_string(h.test_labels[i]),
                             format_double(h.test_scores[i])}) +
                   "\n";
    return out;
}

inline nlohmann::json trained_models_json(const TrainEvalResult& r) {
    nlohmann::json j;
    j["format"] = "crlm-train-eval";
    j["version"] = 1;
    auto& hs = j["horizons"] = nlohmann::json::object();
    for (const auto& h : r.horizons)
        hs[horizon_key(h.horizon)] = {{"preprocess", h.pipeline.to_json()}, {"model", model_to_json(h.model)}};
    return j;
}

// ---------------------------------------------------------------------------
// Survival by risk group

enum class Endpoint { os, dfs };

inline Endpoint parse_endpoint(const std::string& s) {
    if (s == "os") return Endpoint::os;
    if (s == "dfs") return Endpoint::dfs;
    throw Error(ErrorCode::InvalidArgument, "endpoint must be 'os' or 'dfs', got '" + s + "'");
}

struct SurvivalConfig {
    Endpoint endpoint = Endpoint::os;
    std::vector<std::string> cox_covariates;  // cohort variables adjusted for besides the risk group
    bool standardize = true;                  // z-score continuous Cox covariates
};

struct SurvivalAnalysis {
    SurvivalDataset data;  // group holds the risk group label
    std::pair<double, double> cutoffs{0.0, 0.0};
    std::map<std::string, KmCurve> curves;
    std::optional<LogRankResult> log_rank;
    std::string log_rank_error;
    std::optional<CoxModel> cox;
    std::string cox_error;
};

// Numeric Cox covariates from cohort variables. Continuous columns are
// median-imputed (and optionally z-scored); categorical columns become
// indicators for every level except the first in sorted order.
inline void append_cox_covariates(const Cohort& cohort, std::span<const std::size_t> rows,
                                  const std::vector<std::string>& names, bool standardize,
                                  std::vector<std::vector<double>>& cols, std::vector<std::string>& col_names) {
    for (const auto& name : names) {
        const auto& var = cohort.variable(name);
        const auto values = cohort.column(name);
        if (var.kind == VariableKind::continuous) {
            std::vector<double> seen;
            for (auto r : rows)
                if (const double* d = std::get_if<double>(&values[r])) seen.push_back(*d);
            require(!seen.empty(), ErrorCode::InvalidArgument, "covariate '" + name + "' is entirely missing");
            const double fill = numeric::median(seen);
            std::vector<double> col;
            for (auto r : rows) {
                const double* d = std::get_if<double>(&values[r]);
                col.push_back(d ? *d : fill);
            }
            if (standardize) {
                const double m = numeric::mean(col), sd = numeric::population_sd(col);
                for (double& v : col) v = sd > 0 ? (v - m) / sd : 0.0;
            }
            cols.push_back(std::move(col));
            col_names.push_back(name);
        } else {
            std::map<std::string, std::size_t> counts;
            for (auto r : rows)
                if (const auto* s = std::get_if<std::string>(&values[r])) ++counts[*s];
            require(counts.size() >= 2, ErrorCode::InvalidArgument, "covariate '" + name + "' has fewer than two levels");
            const std::string mode = mode_of(counts);
            bool first = true;
            for (const auto& [level, cnt] : counts) {
                if (first) {
                    first = false;
                    continue;
                }
                std::vector<double> col;
                for (auto r : rows) {
                    const auto* s = std::get_if<std::string>(&values[r]);
                    col.push_back((s ? *s : mode) == level ? 1.0 : 0.0);
                }
                cols.push_back(std::move(col));
                col_names.push_back(name + "=" + level);
            }
        }
    }
}

// `scores`: patient id -> risk score; only scored patients are analysed.
// Groups are the score tertiles (high / medium / low); the Cox model uses
// high and medium indicators against low plus the configured covariates.
inline SurvivalAnalysis survival_by_risk(const Cohort& cohort, const std::map<std::string, double>& scores,
                                         const SurvivalConfig& cfg) {
    require(cohort.has_outcomes(), ErrorCode::MissingColumn, "cohort has no survival columns (os_months/os_event)");
    std::vector<std::size_t> rows;
    std::vector<double> s;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto it = scores.find(cohort.records()[i].id);
        if (it == scores.end()) continue;
        rows.push_back(i);
        s.push_back(it->second);
    }
    require(!rows.empty(), ErrorCode::EmptyInput, "no scored patients found in the cohort");
    SurvivalAnalysis a;
    for (auto r : rows) {
        const auto& rec = cohort.records()[r];
        a.data.time.push_back(cfg.endpoint == Endpoint::os ? rec.os_months : rec.dfs_months);
        a.data.event.push_back(cfg.endpoint == Endpoint::os ? rec.os_event : rec.dfs_event);
    }
    std::vector<RiskGroup> groups;
    if (s.size() >= 3) {
        a.cutoffs = tertile_cutoffs(s);
        groups = risk_group_stratification(s, a.cutoffs.first, a.cutoffs.second);
    } else {
        groups.assign(s.size(), RiskGroup::low);
    }
    for (auto g : groups) a.data.group.push_back(to_string(g));
    a.curves = kaplan_meier_by_group(a.data);
    try {
        a.log_rank = log_rank_test(a.data);
    } catch (const Error& e) {
        a.log_rank_error = e.message();
    }

    std::vector<std::vector<double>> cols;
    std::vector<std::string> names;
    for (auto g : {RiskGroup::high, RiskGroup::medium}) {
        std::vector<double> col;
        for (auto x : groups) col.push_back(x == g ? 1.0 : 0.0);
        if (std::any_of(col.begin(), col.end(), [](double v) { return v != 0.0; })) {
            cols.push_back(std::move(col));
            names.push_back("risk_" + to_string(g));
        }
    }
    append_cox_covariates(cohort, rows, cfg.cox_covariates, cfg.standardize, cols, names);
    if (!cols.empty()) {
        SurvivalDataset cd = a.data;
        cd.covariates = Matrix(rows.size(), cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < rows.size(); ++i) cd.covariates(i, j) = cols[j][i];
        cd.covariate_names = names;
        try {
            a.cox = fit_cox(cd);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NonConvergence) throw;
            a.cox_error = e.message();
        }
    }
    return a;
}

inline nlohmann::json survival_report_json(const SurvivalAnalysis& a) {
    nlohmann::json j;
    j["n"] = a.data.size();
    j["cutoffs"] = {a.cutoffs.first, a.cutoffs.second};
    auto& g = j["groups"] = nlohmann::json::object();
    for (const auto& [name, c] : a.curves)
        g[name] = {{"n", c.n},
                   {"events", std::accumulate(c.steps.begin(), c.steps.end(), std::size_t{0},
                                              [](std::size_t acc, const KmStep& st) { return acc + st.n_events; })},
                   {"median_survival", c.median ? nlohmann::json(*c.median) : nlohmann::json(nullptr)}};
    if (a.log_rank)
        j["log_rank"] = {{"chi_square", a.log_rank->chi_square}, {"df", a.log_rank->df}, {"p_value", a.log_rank->p_value}};
    else
        j["log_rank"] = {{"refused", a.log_rank_error}};
    if (a.cox) j["cox"] = cox_to_json(*a.cox);
    else if (!a.cox_error.empty()) j["cox"] = {{"refused", a.cox_error}};
    return j;
}

}  // namespace crlm
