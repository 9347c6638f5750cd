#pragma once

// Cohort data model: schema-tagged clinical variables plus outcome fields,
// CSV/JSON ingestion and export, and Table-I style summaries.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/core/error.hpp"
#include "crlm/core/numeric.hpp"
#include "crlm/core/text.hpp"

namespace crlm {

enum class VariableKind { continuous, categorical };

// `untagged` exists only so programmatically built matrices can represent a
// missing tag; loaders refuse it and the leakage audit treats it as fatal.
enum class TemporalTag { baseline, postoperative, outcome, untagged };

enum class Provenance { clinical, radiomic, derived };

inline std::string to_string(VariableKind k) { return k == VariableKind::continuous ? "continuous" : "categorical"; }

inline std::string to_string(TemporalTag t) {
    switch (t) {
        case TemporalTag::baseline: return "baseline";
        case TemporalTag::postoperative: return "postoperative";
        case TemporalTag::outcome: return "outcome";
        case TemporalTag::untagged: return "untagged";
    }
    return "untagged";
}

inline std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::clinical: return "clinical";
        case Provenance::radiomic: return "radiomic";
        case Provenance::derived: return "derived";
    }
    return "clinical";
}

inline VariableKind parse_kind(const std::string& s) {
    if (s == "continuous") return VariableKind::continuous;
    if (s == "categorical") return VariableKind::categorical;
    throw Error(ErrorCode::ParseError, "unknown variable kind '" + s + "'");
}

inline TemporalTag parse_tag(const std::string& s) {
    if (s == "baseline") return TemporalTag::baseline;
    if (s == "postoperative") return TemporalTag::postoperative;
    if (s == "outcome") return TemporalTag::outcome;
    throw Error(ErrorCode::MissingTag, "invalid temporal_tag '" + s + "'");
}

inline Provenance parse_provenance(const std::string& s) {
    if (s == "clinical") return Provenance::clinical;
    if (s == "radiomic") return Provenance::radiomic;
    if (s == "derived") return Provenance::derived;
    throw Error(ErrorCode::ParseError, "unknown provenance '" + s + "'");
}

// monostate = missing.
using Value = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Value& v) { return std::holds_alternative<std::monostate>(v); }

struct VariableSchema {
    std::string name;
    VariableKind kind = VariableKind::continuous;
    TemporalTag temporal_tag = TemporalTag::untagged;
    Provenance provenance = Provenance::clinical;
    double missing_fraction = 0.0;

    friend bool operator==(const VariableSchema&, const VariableSchema&) = default;
};

struct PatientRecord {
    std::string id;
    std::map<std::string, Value> variables;
    std::optional<double> months_to_progression;
    int recurrence_event = 0;
    double os_months = 0.0;
    int os_event = 0;
    double dfs_months = 0.0;
    int dfs_event = 0;

    friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

// Fixed outcome columns of the cohort CSV; everything else is a schema variable.
inline const std::vector<std::string>& outcome_columns() {
    static const std::vector<std::string> cols = {"months_to_progression", "recurrence_event", "os_months",
                                                  "os_event",              "dfs_months",       "dfs_event"};
    return cols;
}

class Cohort {
public:
    Cohort() = default;

    Cohort(std::vector<PatientRecord> records, std::vector<VariableSchema> schema, bool has_outcomes = true)
        : records_(std::move(records)), schema_(std::move(schema)), has_outcomes_(has_outcomes) {
        validate();
        refresh_missing_fractions();
    }

    const std::vector<PatientRecord>& records() const noexcept { return records_; }
    const std::vector<VariableSchema>& schema() const noexcept { return schema_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    bool has_outcomes() const noexcept { return has_outcomes_; }

    const VariableSchema* find(const std::string& name) const {
        for (const auto& v : schema_)
            if (v.name == name) return &v;
        return nullptr;
    }

    const VariableSchema& variable(const std::string& name) const {
        const auto* v = find(name);
        require(v != nullptr, ErrorCode::MissingColumn, "variable '" + name + "' not in cohort");
        return *v;
    }

    std::vector<Value> column(const std::string& name) const {
        variable(name);
        std::vector<Value> out;
        out.reserve(records_.size());
        for (const auto& r : records_) {
            auto it = r.variables.find(name);
            out.push_back(it == r.variables.end() ? Value{} : it->second);
        }
        return out;
    }

    // Numeric view of a continuous column; missing cells are nullopt.
    std::vector<std::optional<double>> numeric_column(const std::string& name) const {
        std::vector<std::optional<double>> out;
        for (const auto& v : column(name)) {
            if (const double* d = std::get_if<double>(&v)) out.emplace_back(*d);
            else out.emplace_back(std::nullopt);
        }
        return out;
    }

    // New cohort restricted to the named variables (schema order preserved).
    Cohort with_variables(const std::set<std::string>& keep) const {
        std::vector<VariableSchema> schema;
        for (const auto& v : schema_)
            if (keep.count(v.name)) schema.push_back(v);
        std::vector<PatientRecord> records = records_;
        for (auto& r : records)
            std::erase_if(r.variables, [&](const auto& kv) { return keep.count(kv.first) == 0; });
        return Cohort(std::move(records), std::move(schema), has_outcomes_);
    }

    Cohort with_records(std::vector<PatientRecord> records) const {
        return Cohort(std::move(records), schema_, has_outcomes_);
    }

    friend bool operator==(const Cohort&, const Cohort&) = default;

private:
    void validate() const {
        std::unordered_set<std::string> names;
        for (const auto& v : schema_) {
            require(v.temporal_tag != TemporalTag::untagged, ErrorCode::MissingTag,
                    "variable '" + v.name + "' has no temporal_tag");
            require(names.insert(v.name).second, ErrorCode::InvalidArgument,
                    "variable '" + v.name + "' declared twice in schema");
        }
        std::unordered_set<std::string> ids;
        for (const auto& r : records_) {
            require(ids.insert(r.id).second, ErrorCode::DuplicateId, "duplicate patient id '" + r.id + "'");
            for (const auto& [name, value] : r.variables) {
                require(names.count(name) > 0, ErrorCode::UnknownColumn,
                        "record '" + r.id + "' references '" + name + "' absent from schema");
                (void)value;
            }
            require(r.recurrence_event == 0 || r.recurrence_event == 1, ErrorCode::InvalidArgument,
                    "recurrence_event must be 0/1 for '" + r.id + "'");
            require(r.os_event == 0 || r.os_event == 1, ErrorCode::InvalidArgument, "os_event must be 0/1");
            require(r.dfs_event == 0 || r.dfs_event == 1, ErrorCode::InvalidArgument, "dfs_event must be 0/1");
            require(r.os_months >= 0 && r.dfs_months >= 0, ErrorCode::InvalidArgument,
                    "negative survival time for '" + r.id + "'");
            require(!r.months_to_progression || *r.months_to_progression >= 0, ErrorCode::InvalidArgument,
                    "negative months_to_progression for '" + r.id + "'");
            require(r.recurrence_event == 0 || r.months_to_progression.has_value(), ErrorCode::InvalidArgument,
                    "recurrence_event = 1 without months_to_progression for '" + r.id + "'");
        }
    }

    void refresh_missing_fractions() {
        for (auto& v : schema_) {
            if (records_.empty()) {
                v.missing_fraction = 0.0;
                continue;
            }
            std::size_t missing = 0;
            for (const auto& r : records_) {
                auto it = r.variables.find(v.name);
                if (it == r.variables.end() || is_missing(it->second)) ++missing;
            }
            v.missing_fraction = static_cast<double>(missing) / static_cast<double>(records_.size());
        }
    }

    std::vector<PatientRecord> records_;
    std::vector<VariableSchema> schema_;
    bool has_outcomes_ = true;
};

// ---------------------------------------------------------------------------
// Schema JSON: [{"name", "kind", "temporal_tag", optional "provenance"}]

inline std::vector<VariableSchema> parse_schema_json(const nlohmann::json& j) {
    require(j.is_array(), ErrorCode::ParseError, "schema JSON must be an array");
    std::vector<VariableSchema> out;
    for (const auto& e : j) {
        require(e.contains("name") && e["name"].is_string(), ErrorCode::ParseError, "schema entry without name");
        VariableSchema v;
        v.name = e["name"].get<std::string>();
        require(e.contains("kind"), ErrorCode::ParseError, "schema entry '" + v.name + "' without kind");
        v.kind = parse_kind(e["kind"].get<std::string>());
        require(e.contains("temporal_tag") && e["temporal_tag"].is_string(), ErrorCode::MissingTag,
                "schema entry '" + v.name + "' without temporal_tag");
        v.temporal_tag = parse_tag(e["temporal_tag"].get<std::string>());
        if (e.contains("provenance")) v.provenance = parse_provenance(e["provenance"].get<std::string>());
        out.push_back(std::move(v));
    }
    return out;
}

inline nlohmann::json schema_to_json(const std::vector<VariableSchema>& schema) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : schema) {
        nlohmann::json e;
        e["name"] = v.name;
        e["kind"] = to_string(v.kind);
        e["temporal_tag"] = to_string(v.temporal_tag);
        e["provenance"] = to_string(v.provenance);
        j.push_back(std::move(e));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Cohort CSV

inline bool is_missing_token(std::string_view cell) {
    const auto t = trim(cell);
    return t.empty() || to_lower(t) == "na";
}

inline Cohort parse_cohort_csv(const std::vector<std::vector<std::string>>& rows,
                               const std::vector<VariableSchema>& schema) {
    require(!rows.empty(), ErrorCode::ParseError, "cohort CSV has no header");
    const auto& header = rows.front();
    std::unordered_map<std::string, const VariableSchema*> by_name;
    for (const auto& v : schema) by_name[v.name] = &v;

    const auto& oc = outcome_columns();
    std::optional<std::size_t> id_col;
    std::map<std::string, std::size_t> outcome_idx;
    std::vector<std::pair<std::size_t, const VariableSchema*>> var_cols;
    std::unordered_set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name(trim(header[c]));
        require(seen.insert(name).second, ErrorCode::ParseError, "duplicate CSV column '" + name + "'");
        if (name == "id") {
            id_col = c;
        } else if (std::find(oc.begin(), oc.end(), name) != oc.end()) {
            outcome_idx[name] = c;
        } else {
            auto it = by_name.find(name);
            require(it != by_name.end(), ErrorCode::UnknownColumn, "CSV column '" + name + "' absent from schema");
            var_cols.emplace_back(c, it->second);
        }
    }
    require(id_col.has_value(), ErrorCode::MissingColumn, "cohort CSV lacks an 'id' column");
    const bool has_outcomes = outcome_idx.size() == oc.size();

    auto parse_event = [](const std::string& cell, const std::string& what) {
        const auto v = parse_double(cell);
        require(v && (*v == 0.0 || *v == 1.0), ErrorCode::ParseError, what + " must be 0 or 1, got '" + cell + "'");
        return static_cast<int>(*v);
    };
    auto parse_time = [](const std::string& cell) -> std::optional<double> {
        if (is_missing_token(cell)) return std::nullopt;
        return parse_double(cell);
    };

    std::vector<PatientRecord> records;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        require(row.size() == header.size(), ErrorCode::ParseError,
                "CSV row " + std::to_string(r) + " has " + std::to_string(row.size()) + " fields, expected " +
                    std::to_string(header.size()));
        PatientRecord rec;
        rec.id = std::string(trim(row[*id_col]));
        for (const auto& [c, var] : var_cols) {
            const std::string& cell = row[c];
            Value value;
            if (!is_missing_token(cell)) {
                if (var->kind == VariableKind::continuous) {
                    if (auto d = parse_double(cell)) value = *d;
                } else {
                    value = std::string(trim(cell));
                }
            }
            rec.variables.emplace(var->name, std::move(value));
        }
        auto cell = [&](const char* name) -> const std::string* {
            auto it = outcome_idx.find(name);
            return it == outcome_idx.end() ? nullptr : &row[it->second];
        };
        if (const auto* s = cell("months_to_progression")) rec.months_to_progression = parse_time(*s);
        if (const auto* s = cell("recurrence_event")) rec.recurrence_event = parse_event(*s, "recurrence_event");
        if (const auto* s = cell("os_months")) rec.os_months = parse_time(*s).value_or(0.0);
        if (const auto* s = cell("os_event")) rec.os_event = parse_event(*s, "os_event");
        if (const auto* s = cell("dfs_months")) rec.dfs_months = parse_time(*s).value_or(0.0);
        if (const auto* s = cell("dfs_event")) rec.dfs_event = parse_event(*s, "dfs_event");
        records.push_back(std::move(rec));
    }

    // Schema entries not present in the CSV are dropped so the cohort's
    // variable universe matches the file.
    std::vector<VariableSchema> used;
    for (const auto& v : schema)
        if (seen.count(v.name)) used.push_back(v);
    return Cohort(std::move(records), std::move(used), has_outcomes);
}

inline Cohort load_cohort_csv(const std::string& path, const std::string& schema_path) {
    nlohmann::json schema_json;
    try {
        schema_json = nlohmann::json::parse(read_file(schema_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "schema " + schema_path + ": " + e.what());
    }
    return parse_cohort_csv(read_csv_rows(path), parse_schema_json(schema_json));
}

inline std::string cell_text(const Value& v) {
    if (const double* d = std::get_if<double>(&v)) return format_double(*d);
    if (const std::string* s = std::get_if<std::string>(&v)) return *s;
    return "NA";
}

inline std::string write_cohort_csv(const Cohort& cohort) {
    std::vector<std::string> header = {"id"};
    for (const auto& v : cohort.schema()) header.push_back(v.name);
    if (cohort.has_outcomes())
        for (const auto& c : outcome_columns()) header.push_back(c);
    std::string out = join_csv(header) + "\n";
    for (const auto& r : cohort.records()) {
        std::vector<std::string> row = {r.id};
        for (const auto& v : cohort.schema()) {
            auto it = r.variables.find(v.name);
            row.push_back(it == r.variables.end() ? "NA" : cell_text(it->second));
        }
        if (cohort.has_outcomes()) {
            row.push_back(r.months_to_progression ? format_double(*r.months_to_progression) : "NA");
            row.push_back(std::to_string(r.recurrence_event));
            row.push_back(format_double(r.os_months));
            row.push_back(std::to_string(r.os_event));
            row.push_back(format_double(r.dfs_months));
            row.push_back(std::to_string(r.dfs_event));
        }
        out += join_csv(row) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summary table

struct LevelCount {
    std::string level;
    std::size_t count = 0;
    double percent = 0.0;  // of observed values
};

struct VariableSummary {
    std::string name;
    VariableKind kind = VariableKind::continuous;
    TemporalTag temporal_tag = TemporalTag::baseline;
    std::size_t n_observed = 0;
    double missing_fraction = 0.0;
    std::optional<double> mean;
    std::optional<double> sd;  // n-1 denominator
    std::vector<LevelCount> levels;
};

struct CohortSummary {
    std::size_t n_patients = 0;
    std::vector<VariableSummary> variables;

    const VariableSummary& at(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return v;
        throw Error(ErrorCode::MissingColumn, "no summary for '" + name + "'");
    }
};

inline CohortSummary summarize_cohort(const Cohort& cohort) {
    require(!cohort.empty(), ErrorCode::EmptyInput, "cannot summarize an empty cohort");
    CohortSummary out;
    out.n_patients = cohort.size();
    for (const auto& var : cohort.schema()) {
        VariableSummary s;
        s.name = var.name;
        s.kind = var.kind;
        s.temporal_tag = var.temporal_tag;
        s.missing_fraction = var.missing_fraction;
        const auto col = cohort.column(var.name);
        if (var.kind == VariableKind::continuous) {
            std::vector<double> xs;
            for (const auto& v : col)
                if (const double* d = std::get_if<double>(&v)) xs.push_back(*d);
            s.n_observed = xs.size();
            if (!xs.empty()) {
                s.mean = numeric::mean(xs);
                s.sd = numeric::sample_sd(xs);
            }
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& v : col)
                if (const auto* str = std::get_if<std::string>(&v)) ++counts[*str];
            for (const auto& [level, n] : counts) s.n_observed += n;
            for (const auto& [level, n] : counts)
                s.levels.push_back({level, n, 100.0 * static_cast<double>(n) / static_cast<double>(s.n_observed)});
        }
        out.variables.push_back(std::move(s));
    }
    return out;
}

inline std::string render_summary(const CohortSummary& summary) {
    std::ostringstream os;
    os << "Characteristic (N=" << summary.n_patients << ")\n";
    for (const auto& v : summary.variables) {
        os << "  " << v.name << " [" << to_string(v.temporal_tag) << "]";
        if (v.kind == VariableKind::continuous) {
            if (v.mean) os << ": " << format_fixed(*v.mean, 2) << " +/- " << format_fixed(*v.sd, 2);
            else os << ": all missing";
        } else {
            os << ":";
            for (const auto& l : v.levels) os << " " << l.level << " " << l.count << " (" << format_fixed(l.percent, 1) << "%)";
        }
        if (v.missing_fraction > 0) os << "  missing " << format_fixed(100.0 * v.missing_fraction, 1) << "%";
        os << "\n";
    }
    return os.str();
}

}  // namespace crlm
