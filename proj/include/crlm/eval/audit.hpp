#pragma once

// Temporal leakage audit. A model is "leaked" when any non-baseline column was
// among its inputs, or when non-baseline columns carry more than
// `importance_threshold` of the importance among the top-k features of a
// diagnostic fit that deliberately includes every column.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/core/text.hpp"
#include "crlm/models/model.hpp"
#include "crlm/preprocess.hpp"

namespace crlm {

enum class Verdict { clean, leaked };

inline std::string to_string(Verdict v) { return v == Verdict::clean ? "clean" : "leaked"; }

struct FlaggedFeature {
    std::string name;
    TemporalTag temporal_tag = TemporalTag::untagged;
    double importance = 0.0;   // in the diagnostic fit
    bool model_input = false;  // available to the audited model
    bool top_k = false;        // among the diagnostic top-k
};

struct LeakageAuditReport {
    std::vector<FlaggedFeature> flagged;
    std::vector<std::pair<std::string, double>> top_features;  // diagnostic top-k
    double top_k_cumulative_importance = 0.0;                  // all top-k features
    double flagged_top_k_importance = 0.0;                     // non-baseline share of the top-k
    double importance_threshold = 0.5;
    std::size_t top_k = 5;
    bool non_baseline_inputs = false;
    Verdict verdict = Verdict::clean;
};

inline void require_tagged(const std::vector<ColumnInfo>& cols) {
    for (const auto& c : cols)
        require(c.temporal_tag != TemporalTag::untagged, ErrorCode::MissingTag,
                "column '" + c.name + "' has no temporal tag");
}

// `model_inputs`: columns the audited model was trained on. `diagnostic_columns`
// and `diagnostic_importance`: the all-columns diagnostic fit.
inline LeakageAuditReport leakage_audit(const std::vector<ColumnInfo>& model_inputs,
                                        const std::vector<ColumnInfo>& diagnostic_columns,
                                        const FeatureImportanceReport& diagnostic_importance,
                                        double importance_threshold = 0.5, std::size_t top_k = 5) {
    require_tagged(model_inputs);
    require_tagged(diagnostic_columns);
    require(importance_threshold >= 0 && importance_threshold <= 1, ErrorCode::InvalidArgument,
            "importance threshold must lie in [0,1]");
    LeakageAuditReport r;
    r.importance_threshold = importance_threshold;
    r.top_k = top_k;

    std::map<std::string, const ColumnInfo*> diag;
    for (const auto& c : diagnostic_columns) diag[c.name] = &c;
    auto flag = [&](const std::string& name, TemporalTag tag) -> FlaggedFeature& {
        for (auto& f : r.flagged)
            if (f.name == name) return f;
        r.flagged.push_back({name, tag, diagnostic_importance.of(name), false, false});
        return r.flagged.back();
    };

    for (const auto& c : model_inputs)
        if (c.temporal_tag != TemporalTag::baseline) {
            flag(c.name, c.temporal_tag).model_input = true;
            r.non_baseline_inputs = true;
        }
    for (std::size_t i = 0; i < std::min(top_k, diagnostic_importance.ranked.size()); ++i) {
        const auto& [name, imp] = diagnostic_importance.ranked[i];
        r.top_features.emplace_back(name, imp);
        r.top_k_cumulative_importance += imp;
        const auto it = diag.find(name);
        require(it != diag.end(), ErrorCode::UnknownColumn, "importance names unknown column '" + name + "'");
        if (it->second->temporal_tag != TemporalTag::baseline) {
            flag(name, it->second->temporal_tag).top_k = true;
            r.flagged_top_k_importance += imp;
        }
    }
    r.verdict = (r.non_baseline_inputs || r.flagged_top_k_importance > importance_threshold) ? Verdict::leaked
                                                                                             : Verdict::clean;
    return r;
}

// Fits the diagnostic model on `all_columns` (which should include the
// non-baseline columns) and audits `model_inputs` against it.
inline LeakageAuditReport run_leakage_audit(const std::vector<ColumnInfo>& model_inputs, const FeatureMatrix& all_columns,
                                            std::span<const int> labels, const ModelSpec& diagnostic_spec,
                                            std::uint64_t seed, double importance_threshold = 0.5) {
    require_tagged(all_columns.columns);
    const auto model = fit_model(diagnostic_spec, all_columns.values, labels, seed);
    return leakage_audit(model_inputs, all_columns.columns, feature_importance(model, all_columns.names()),
                         importance_threshold);
}

inline nlohmann::json audit_to_json(const LeakageAuditReport& r) {
    nlohmann::json j;
    j["verdict"] = to_string(r.verdict);
    j["importance_threshold"] = r.importance_threshold;
    j["top_k"] = r.top_k;
    j["top_k_cumulative_importance"] = r.top_k_cumulative_importance;
    j["flagged_top_k_importance"] = r.flagged_top_k_importance;
    j["non_baseline_inputs"] = r.non_baseline_inputs;
    j["top_features"] = nlohmann::json::array();
    for (const auto& [n, v] : r.top_features) j["top_features"].push_back({{"name", n}, {"importance", v}});
    j["flagged"] = nlohmann::json::array();
    for (const auto& f : r.flagged)
        j["flagged"].push_back({{"name", f.name},
                                {"temporal_tag", to_string(f.temporal_tag)},
                                {"importance", f.importance},
                                {"model_input", f.model_input},
                                {"top_k", f.top_k}});
    return j;
}

inline std::string audit_to_text(const LeakageAuditReport& r) {
    std::string out = "Leakage audit: " + to_string(r.verdict) + "\n";
    out += "  non-baseline model inputs: " + std::string(r.non_baseline_inputs ? "yes" : "no") + "\n";
    out += "  top-" + std::to_string(r.top_k) + " cumulative importance: " + format_fixed(r.top_k_cumulative_importance, 3) +
           "\n";
    out += "  non-baseline share of top-" + std::to_string(r.top_k) + ": " + format_fixed(r.flagged_top_k_importance, 3) +
           " (threshold " + format_fixed(r.importance_threshold, 3) + ")\n";
    out += "  top features:\n";
    for (const auto& [n, v] : r.top_features) out += "    " + n + "  " + format_fixed(v, 3) + "\n";
    if (!r.flagged.empty()) {
        out += "  flagged:\n";
        for (const auto& f : r.flagged) {
            out += "    " + f.name + " [" + to_string(f.temporal_tag) + "] importance " + format_fixed(f.importance, 3);
            if (f.model_input) out += " model-input";
            if (f.top_k) out += " top-" + std::to_string(r.top_k);
            out += "\n";
        }
    }
    return out;
}

}  // namespace crlm
