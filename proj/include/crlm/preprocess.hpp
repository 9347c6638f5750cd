#pragma once

// Deterministic preprocessing: missingness filter, median/mode imputation,
// z-scoring and one-hot encoding with an explicit fit/transform split,
// metabolic scoring, horizon labels, the baseline-only gate, stratified
// splitting and SMOTE.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/cohort.hpp"
#include "crlm/core/matrix.hpp"
#include "crlm/core/rng.hpp"

namespace crlm {

struct ColumnInfo {
    std::string name;
    VariableKind kind = VariableKind::continuous;
    Provenance provenance = Provenance::clinical;
    TemporalTag temporal_tag = TemporalTag::untagged;
    std::string source;     // originating variable (differs from name for one-hot indicators)
    bool constant = false;  // zero-variance on the fit rows; emitted as zeros

    friend bool operator==(const ColumnInfo&, const ColumnInfo&) = default;
};

// Mixed-type, possibly incomplete table; column-major.
class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> ids, std::vector<ColumnInfo> columns, std::vector<std::vector<Value>> cells)
        : ids_(std::move(ids)), columns_(std::move(columns)), cells_(std::move(cells)) {
        require(columns_.size() == cells_.size(), ErrorCode::DimensionMismatch, "column count mismatch");
        for (const auto& c : cells_)
            require(c.size() == ids_.size(), ErrorCode::DimensionMismatch, "column length mismatch");
    }

    static FeatureTable from_cohort(const Cohort& cohort) {
        std::vector<std::string> ids;
        for (const auto& r : cohort.records()) ids.push_back(r.id);
        std::vector<ColumnInfo> cols;
        std::vector<std::vector<Value>> cells;
        for (const auto& v : cohort.schema()) {
            cols.push_back({v.name, v.kind, v.provenance, v.temporal_tag, v.name, false});
            cells.push_back(cohort.column(v.name));
        }
        return FeatureTable(std::move(ids), std::move(cols), std::move(cells));
    }

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<ColumnInfo>& columns() const noexcept { return columns_; }
    const Value& cell(std::size_t row, std::size_t col) const { return cells_[col][row]; }

    FeatureTable select_columns(std::span<const std::size_t> keep) const {
        std::vector<ColumnInfo> cols;
        std::vector<std::vector<Value>> cells;
        for (auto c : keep) {
            cols.push_back(columns_[c]);
            cells.push_back(cells_[c]);
        }
        return FeatureTable(ids_, std::move(cols), std::move(cells));
    }

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

private:
    std::vector<std::string> ids_;
    std::vector<ColumnInfo> columns_;
    std::vector<std::vector<Value>> cells_;
};

// Fully numeric design matrix with per-column provenance and tags.
struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<ColumnInfo> columns;
    Matrix values;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return columns.size(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& c : columns) out.push_back(c.name);
        return out;
    }

    FeatureMatrix select_columns(std::span<const std::size_t> keep) const {
        FeatureMatrix out;
        out.ids = ids;
        out.values = Matrix(values.rows(), keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j) {
            out.columns.push_back(columns[keep[j]]);
            for (std::size_t r = 0; r < values.rows(); ++r) out.values(r, j) = values(r, keep[j]);
        }
        return out;
    }

    FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
        FeatureMatrix out;
        out.columns = columns;
        out.values = values.select_rows(idx);
        for (auto i : idx) out.ids.push_back(ids[i]);
        return out;
    }
};

inline std::string write_feature_matrix_csv(const FeatureMatrix& m) {
    std::vector<std::string> header = {"id"};
    for (const auto& c : m.columns) header.push_back(c.name);
    std::string out = join_csv(header) + "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row = {m.ids[r]};
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(format_double(m.values(r, c)));
        out += join_csv(row) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Access tracking. Every fit step reads training data through a TableView,
// which reports the underlying row indices it touches to an optional log.

struct AccessLog {
    std::set<std::size_t> rows_read;
    void touch(std::size_t row) { rows_read.insert(row); }
};

class TableView {
public:
    TableView(const FeatureTable& table, std::vector<std::size_t> rows, AccessLog* log = nullptr)
        : table_(&table), rows_(std::move(rows)), log_(log) {}

    static TableView all(const FeatureTable& table, AccessLog* log = nullptr) {
        std::vector<std::size_t> rows(table.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        return TableView(table, std::move(rows), log);
    }

    std::size_t rows() const noexcept { return rows_.size(); }
    std::size_t cols() const noexcept { return table_->cols(); }
    const std::vector<ColumnInfo>& columns() const noexcept { return table_->columns(); }
    std::size_t source_row(std::size_t local) const { return rows_[local]; }
    const std::vector<std::size_t>& source_rows() const noexcept { return rows_; }
    const FeatureTable& table() const noexcept { return *table_; }
    AccessLog* log() const noexcept { return log_; }

    const Value& cell(std::size_t local, std::size_t col) const {
        const std::size_t r = rows_[local];
        if (log_) log_->touch(r);
        return table_->cell(r, col);
    }

private:
    const FeatureTable* table_;
    std::vector<std::size_t> rows_;
    AccessLog* log_;
};

// ---------------------------------------------------------------------------
// Missingness filter

struct RemovedColumn {
    std::string name;
    double missing_fraction = 0.0;
};

struct MissingnessResult {
    Cohort cohort;
    std::vector<RemovedColumn> removed;
};

// Drops variables whose missing fraction is strictly greater than threshold.
inline MissingnessResult drop_high_missingness(const Cohort& cohort, double threshold = 0.30) {
    require(threshold > 0.0 && threshold <= 1.0, ErrorCode::InvalidArgument, "missingness threshold must be in (0,1]");
    std::set<std::string> keep;
    std::vector<RemovedColumn> removed;
    for (const auto& v : cohort.schema()) {
        if (v.missing_fraction > threshold) removed.push_back({v.name, v.missing_fraction});
        else keep.insert(v.name);
    }
    require(!keep.empty(), ErrorCode::InvalidArgument, "missingness filter removed every column");
    return {cohort.with_variables(keep), std::move(removed)};
}

inline std::string removal_manifest_csv(const std::vector<RemovedColumn>& removed, double threshold) {
    std::string out = "name,missing_fraction,threshold\n";
    for (const auto& r : removed)
        out += join_csv({r.name, format_double(r.missing_fraction), format_double(threshold)}) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Baseline-only gate

struct RemovedByTag {
    std::string name;
    TemporalTag temporal_tag;
};

template <typename T>
struct BaselineFilterResult {
    T data;
    std::vector<RemovedByTag> removed;
    bool empty_result = false;
};

namespace detail {
inline const std::vector<ColumnInfo>& column_infos(const FeatureTable& t) { return t.columns(); }
inline const std::vector<ColumnInfo>& column_infos(const FeatureMatrix& m) { return m.columns; }
}  // namespace detail

template <typename T>
BaselineFilterResult<T> baseline_only_filter(const T& data) {
    const auto& cols = detail::column_infos(data);
    std::vector<std::size_t> keep;
    std::vector<RemovedByTag> removed;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        require(cols[c].temporal_tag != TemporalTag::untagged, ErrorCode::MissingTag,
                "column '" + cols[c].name + "' carries no temporal tag");
        if (cols[c].temporal_tag == TemporalTag::baseline) keep.push_back(c);
        else removed.push_back({cols[c].name, cols[c].temporal_tag});
    }
    return {data.select_columns(keep), std::move(removed), keep.empty()};
}

inline std::string audit_manifest_csv(const std::vector<RemovedByTag>& removed) {
    std::string out = "name,temporal_tag\n";
    for (const auto& r : removed) out += join_csv({r.name, to_string(r.temporal_tag)}) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Imputation

struct ImputeState {
    // One entry per input column: the fill value learned on the fit rows.
    std::vector<Value> fill;
};

// Lexicographically smallest level wins a mode tie.
inline std::string mode_of(const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [level, n] : counts)
        if (n > best_n) {
            best = level;
            best_n = n;
        }
    return best;
}

inline ImputeState fit_imputer(const TableView& view) {
    require(view.rows() > 0, ErrorCode::EmptyInput, "imputation fit set is empty");
    ImputeState state;
    for (std::size_t c = 0; c < view.cols(); ++c) {
        const auto& info = view.columns()[c];
        if (info.kind == VariableKind::continuous) {
            std::vector<double> xs;
            for (std::size_t r = 0; r < view.rows(); ++r)
                if (const double* d = std::get_if<double>(&view.cell(r, c))) xs.push_back(*d);
            require(!xs.empty(), ErrorCode::EmptyInput, "column '" + info.name + "' entirely missing on fit rows");
            state.fill.emplace_back(numeric::median(std::move(xs)));
        } else {
            std::map<std::string, std::size_t> counts;
            for (std::size_t r = 0; r < view.rows(); ++r)
                if (const auto* s = std::get_if<std::string>(&view.cell(r, c))) ++counts[*s];
            require(!counts.empty(), ErrorCode::EmptyInput, "column '" + info.name + "' entirely missing on fit rows");
            state.fill.emplace_back(mode_of(counts));
        }
    }
    return state;
}

inline FeatureTable apply_imputer(const ImputeState& state, const TableView& view) {
    require(state.fill.size() == view.cols(), ErrorCode::DimensionMismatch, "imputer fitted on different columns");
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < view.rows(); ++r) ids.push_back(view.table().ids()[view.source_row(r)]);
    std::vector<std::vector<Value>> cells(view.cols());
    for (std::size_t c = 0; c < view.cols(); ++c) {
        cells[c].reserve(view.rows());
        for (std::size_t r = 0; r < view.rows(); ++r) {
            const Value& v = view.cell(r, c);
            cells[c].push_back(is_missing(v) ? state.fill[c] : v);
        }
    }
    return FeatureTable(std::move(ids), view.columns(), std::move(cells));
}

struct ImputeResult {
    FeatureTable table;
    ImputeState state;
};

// Fit on `fit_on` rows, fill every row of the table.
inline ImputeResult impute(const FeatureTable& table, std::span<const std::size_t> fit_on) {
    require(!fit_on.empty(), ErrorCode::EmptyInput, "imputation fit set is empty");
    auto state = fit_imputer(TableView(table, {fit_on.begin(), fit_on.end()}));
    auto filled = apply_imputer(state, TableView::all(table));
    return {std::move(filled), std::move(state)};
}

// ---------------------------------------------------------------------------
// Normalization and one-hot encoding

struct EncodeState {
    struct Column {
        double mean = 0.0;
        double sd = 1.0;
        bool constant = false;
        std::vector<std::string> levels;  // categorical vocabulary, sorted
    };
    std::vector<Column> columns;
};

inline EncodeState fit_encoder(const TableView& view) {
    require(view.rows() > 0, ErrorCode::EmptyInput, "encoder fit set is empty");
    EncodeState state;
    for (std::size_t c = 0; c < view.cols(); ++c) {
        const auto& info = view.columns()[c];
        EncodeState::Column col;
        if (info.kind == VariableKind::continuous) {
            std::vector<double> xs;
            for (std::size_t r = 0; r < view.rows(); ++r) {
                const double* d = std::get_if<double>(&view.cell(r, c));
                require(d != nullptr, ErrorCode::InvalidArgument, "encoder requires imputed data ('" + info.name + "')");
                xs.push_back(*d);
            }
            col.mean = numeric::mean(xs);
            col.sd = numeric::population_sd(xs);
            col.constant = !(col.sd > 0.0);
        } else {
            std::set<std::string> levels;
            for (std::size_t r = 0; r < view.rows(); ++r) {
                const auto* s = std::get_if<std::string>(&view.cell(r, c));
                require(s != nullptr, ErrorCode::InvalidArgument, "encoder requires imputed data ('" + info.name + "')");
                levels.insert(*s);
            }
            col.levels.assign(levels.begin(), levels.end());
        }
        state.columns.push_back(std::move(col));
    }
    return state;
}

inline std::vector<ColumnInfo> encoded_columns(const EncodeState& state, const std::vector<ColumnInfo>& inputs) {
    std::vector<ColumnInfo> out;
    for (std::size_t c = 0; c < inputs.size(); ++c) {
        const auto& info = inputs[c];
        const auto& col = state.columns[c];
        if (info.kind == VariableKind::continuous) {
            auto ci = info;
            ci.source = info.name;
            ci.constant = col.constant;
            out.push_back(std::move(ci));
        } else {
            for (const auto& level : col.levels) {
                ColumnInfo ci = info;
                ci.name = info.name + "=" + level;
                ci.source = info.name;
                ci.kind = VariableKind::categorical;
                out.push_back(std::move(ci));
            }
        }
    }
    return out;
}

inline FeatureMatrix apply_encoder(const EncodeState& state, const TableView& view) {
    require(state.columns.size() == view.cols(), ErrorCode::DimensionMismatch, "encoder fitted on different columns");
    FeatureMatrix out;
    out.columns = encoded_columns(state, view.columns());
    out.values = Matrix(view.rows(), out.columns.size());
    for (std::size_t r = 0; r < view.rows(); ++r) out.ids.push_back(view.table().ids()[view.source_row(r)]);
    std::size_t j = 0;
    for (std::size_t c = 0; c < view.cols(); ++c) {
        const auto& info = view.columns()[c];
        const auto& col = state.columns[c];
        if (info.kind == VariableKind::continuous) {
            for (std::size_t r = 0; r < view.rows(); ++r) {
                const double* d = std::get_if<double>(&view.cell(r, c));
                require(d != nullptr, ErrorCode::InvalidArgument, "missing value in '" + info.name + "' at transform");
                out.values(r, j) = col.constant ? 0.0 : (*d - col.mean) / col.sd;
            }
            ++j;
        } else {
            for (std::size_t r = 0; r < view.rows(); ++r) {
                const auto* s = std::get_if<std::string>(&view.cell(r, c));
                for (std::size_t l = 0; l < col.levels.size(); ++l)
                    out.values(r, j + l) = (s != nullptr && *s == col.levels[l]) ? 1.0 : 0.0;
            }
            j += col.levels.size();
        }
    }
    return out;
}

struct EncodeResult {
    FeatureMatrix matrix;
    EncodeState state;
};

// `table` must already be imputed.
inline EncodeResult normalize_and_encode(const FeatureTable& table, std::span<const std::size_t> fit_on) {
    require(!fit_on.empty(), ErrorCode::EmptyInput, "encoder fit set is empty");
    auto state = fit_encoder(TableView(table, {fit_on.begin(), fit_on.end()}));
    auto m = apply_encoder(state, TableView::all(table));
    return {std::move(m), std::move(state)};
}

// ---------------------------------------------------------------------------
// Fitted preprocessing pipeline (imputation + encoding) with JSON replay.

class PreprocessPipeline {
public:
    PreprocessPipeline() = default;

    static PreprocessPipeline fit(const TableView& train) {
        PreprocessPipeline p;
        p.inputs_ = train.columns();
        p.impute_ = fit_imputer(train);
        const FeatureTable imputed = apply_imputer(p.impute_, train);
        p.encode_ = fit_encoder(TableView::all(imputed));
        return p;
    }

    FeatureMatrix transform(const TableView& view) const {
        require(view.columns().size() == inputs_.size(), ErrorCode::DimensionMismatch, "pipeline input width");
        for (std::size_t c = 0; c < inputs_.size(); ++c)
            require(view.columns()[c].name == inputs_[c].name, ErrorCode::DimensionMismatch,
                    "pipeline column mismatch at '" + inputs_[c].name + "'");
        const FeatureTable imputed = apply_imputer(impute_, view);
        return apply_encoder(encode_, TableView::all(imputed));
    }

    FeatureMatrix transform(const FeatureTable& table) const { return transform(TableView::all(table)); }

    const ImputeState& impute_state() const noexcept { return impute_; }
    const EncodeState& encode_state() const noexcept { return encode_; }
    const std::vector<ColumnInfo>& inputs() const noexcept { return inputs_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["format"] = "crlm-preprocess";
        j["version"] = 1;
        auto& cols = j["columns"] = nlohmann::json::array();
        for (std::size_t c = 0; c < inputs_.size(); ++c) {
            const auto& info = inputs_[c];
            const auto& enc = encode_.columns[c];
            nlohmann::json e;
            e["name"] = info.name;
            e["kind"] = to_string(info.kind);
            e["temporal_tag"] = to_string(info.temporal_tag);
            e["provenance"] = to_string(info.provenance);
            if (info.kind == VariableKind::continuous) {
                e["impute"] = std::get<double>(impute_.fill[c]);
                e["mean"] = enc.mean;
                e["sd"] = enc.sd;
                e["constant"] = enc.constant;
            } else {
                e["impute"] = std::get<std::string>(impute_.fill[c]);
                e["levels"] = enc.levels;
            }
            cols.push_back(std::move(e));
        }
        return j;
    }

    static PreprocessPipeline from_json(const nlohmann::json& j) {
        require(j.value("format", "") == "crlm-preprocess", ErrorCode::ParseError, "not a preprocess fit_state");
        PreprocessPipeline p;
        for (const auto& e : j.at("columns")) {
            ColumnInfo info;
            info.name = e.at("name").get<std::string>();
            info.source = info.name;
            info.kind = parse_kind(e.at("kind").get<std::string>());
            info.temporal_tag = parse_tag(e.at("temporal_tag").get<std::string>());
            info.provenance = parse_provenance(e.at("provenance").get<std::string>());
            EncodeState::Column enc;
            if (info.kind == VariableKind::continuous) {
                p.impute_.fill.emplace_back(e.at("impute").get<double>());
                enc.mean = e.at("mean").get<double>();
                enc.sd = e.at("sd").get<double>();
                enc.constant = e.at("constant").get<bool>();
            } else {
                p.impute_.fill.emplace_back(e.at("impute").get<std::string>());
                enc.levels = e.at("levels").get<std::vector<std::string>>();
            }
            p.inputs_.push_back(std::move(info));
            p.encode_.columns.push_back(std::move(enc));
        }
        return p;
    }

private:
    std::vector<ColumnInfo> inputs_;
    ImputeState impute_;
    EncodeState encode_;
};

// ---------------------------------------------------------------------------
// Metabolic score

enum class Tertile { high, medium, low };

inline std::string to_string(Tertile t) {
    switch (t) {
        case Tertile::high: return "high";
        case Tertile::medium: return "medium";
        case Tertile::low: return "low";
    }
    return "low";
}

struct MetabolicScore {
    double score = 0.0;
    Tertile tertile = Tertile::low;
};

// Tertile sizes: low and medium receive floor(n/3) patients each and the high
// group absorbs the remainder (67/65/65 at n = 197). Ranking is by descending
// score; equal scores are ordered by id.
inline std::vector<Tertile> assign_tertiles(std::span<const double> scores, std::span<const std::string> ids) {
    const std::size_t n = scores.size();
    require(n >= 3, ErrorCode::InvalidArgument, "tertiles need at least 3 patients");
    require(ids.size() == n, ErrorCode::DimensionMismatch, "ids and scores differ in length");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    });
    const std::size_t third = n / 3;
    const std::size_t n_high = n - 2 * third;
    std::vector<Tertile> out(n);
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t i = order[rank];
        out[i] = rank < n_high ? Tertile::high : (rank < n_high + third ? Tertile::medium : Tertile::low);
    }
    return out;
}

inline std::vector<double> population_z(std::span<const double> x) {
    const double m = numeric::mean(x);
    const double sd = numeric::population_sd(x);
    std::vector<double> z(x.size(), 0.0);
    if (sd > 0.0)
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / sd;
    return z;
}

// score = z(NASH) + z(BMI) + z(-liver HU), population z over the given cohort.
inline std::vector<MetabolicScore> metabolic_score(std::span<const double> nash, std::span<const double> bmi,
                                                   std::span<const double> liver_hu,
                                                   std::span<const std::string> ids) {
    const std::size_t n = nash.size();
    require(n >= 3, ErrorCode::InvalidArgument, "metabolic tertiles need at least 3 patients");
    require(bmi.size() == n && liver_hu.size() == n && ids.size() == n, ErrorCode::DimensionMismatch,
            "metabolic inputs differ in length");
    std::vector<double> neg_hu(liver_hu.begin(), liver_hu.end());
    for (auto& v : neg_hu) v = -v;
    const auto zn = population_z(nash);
    const auto zb = population_z(bmi);
    const auto zh = population_z(neg_hu);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = zn[i] + zb[i] + zh[i];
    const auto tertiles = assign_tertiles(scores, ids);
    std::vector<MetabolicScore> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {scores[i], tertiles[i]};
    return out;
}

struct MetabolicColumns {
    std::string nash = "nash_score";
    std::string bmi = "bmi";
    std::string liver_hu = "liver_hu";
};

inline std::vector<MetabolicScore> metabolic_score(const Cohort& cohort, const MetabolicColumns& names = {}) {
    auto dense = [&](const std::string& name) {
        std::vector<double> out;
        for (const auto& v : cohort.numeric_column(name)) {
            require(v.has_value(), ErrorCode::InvalidArgument, "metabolic input '" + name + "' has missing values");
            out.push_back(*v);
        }
        return out;
    };
    std::vector<std::string> ids;
    for (const auto& r : cohort.records()) ids.push_back(r.id);
    return metabolic_score(dense(names.nash), dense(names.bmi), dense(names.liver_hu), ids);
}

// ---------------------------------------------------------------------------
// Horizon labels

struct HorizonLabels {
    double horizon_months = 3.0;
    std::vector<int> labels;
};

// label = (months_to_progression <= horizon) and (recurrence_event = 1)
inline HorizonLabels make_horizon_labels(const Cohort& cohort, double horizon) {
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
    require(cohort.has_outcomes(), ErrorCode::MissingColumn,
            "cohort has no outcome columns (need 'months_to_progression' and 'recurrence_event')");
    HorizonLabels out{horizon, {}};
    for (const auto& r : cohort.records()) {
        require(r.recurrence_event == 0 || r.months_to_progression.has_value(), ErrorCode::InvalidArgument,
                "recurrence_event = 1 without months_to_progression for '" + r.id + "'");
        const bool pos = r.recurrence_event == 1 && *r.months_to_progression <= horizon;
        out.labels.push_back(pos ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stratified split and folds

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::InvalidArgument,
            "train_fraction must lie in (0,1) so both parts are non-empty");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, ErrorCode::InvalidArgument, "labels must be 0/1");
        by_class[labels[i]].push_back(i);
    }
    for (int c = 0; c < 2; ++c)
        require(by_class[c].size() >= 2, ErrorCode::SingleClass,
                "class " + std::to_string(c) + " has fewer than 2 members");
    Rng rng(derive_seed(seed, 0x5711));
    Split out;
    for (auto& members : by_class) {
        rng.shuffle(members.begin(), members.end());
        const auto n = members.size();
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

// Fold id per row; each class is shuffled then dealt round-robin.
inline std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t n_folds, std::uint64_t seed) {
    require(n_folds >= 2, ErrorCode::InvalidArgument, "need at least 2 folds");
    require(n_folds <= labels.size(), ErrorCode::InvalidArgument, "more folds than rows");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] != 0].push_back(i);
    Rng rng(derive_seed(seed, 0xf01d));
    std::vector<std::size_t> fold(labels.size());
    std::size_t next = 0;
    for (auto& members : by_class) {
        rng.shuffle(members.begin(), members.end());
        for (auto i : members) fold[i] = next++ % n_folds;
    }
    return fold;
}

// ---------------------------------------------------------------------------
// SMOTE

struct SmoteResult {
    Matrix values;
    std::vector<int> labels;
    std::vector<bool> synthetic;
};

// Oversamples the minority class to a 1:1 balance. Synthetic row =
// x + u * (neighbor - x), neighbor drawn from the k nearest minority rows.
inline SmoteResult smote_oversample(const Matrix& x, std::span<const int> labels, std::size_t k,
                                    std::uint64_t seed) {
    require(x.rows() == labels.size(), ErrorCode::DimensionMismatch, "SMOTE rows and labels differ");
    require(k >= 1, ErrorCode::InvalidArgument, "SMOTE k must be >= 1");
    std::vector<std::size_t> members[2];
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i] != 0].push_back(i);
    const int minority = members[1].size() < members[0].size() ? 1 : 0;
    const auto& mino = members[minority];
    const auto& majo = members[1 - minority];
    require(mino.size() >= 2, ErrorCode::InvalidArgument, "SMOTE needs at least 2 minority rows");

    SmoteResult out{x, {labels.begin(), labels.end()}, std::vector<bool>(labels.size(), false)};
    const std::size_t n_new = majo.size() - mino.size();
    if (n_new == 0) return out;
    const std::size_t kk = std::min(k, mino.size() - 1);

    // k nearest minority neighbours of each minority row; distance ties keep lower index.
    std::vector<std::vector<std::size_t>> neighbours(mino.size());
    for (std::size_t a = 0; a < mino.size(); ++a) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t b = 0; b < mino.size(); ++b) {
            if (a == b) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double diff = x(mino[a], c) - x(mino[b], c);
                s += diff * diff;
            }
            d.emplace_back(s, b);
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
        for (std::size_t t = 0; t < kk; ++t) neighbours[a].push_back(d[t].second);
    }

    Rng rng(derive_seed(seed, 0x5307e));
    std::vector<double> row(x.cols());
    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t a = rng.index(mino.size());
        const std::size_t b = neighbours[a][rng.index(kk)];
        const double u = rng.uniform();
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double base = x(mino[a], c);
            row[c] = base + u * (x(mino[b], c) - base);
        }
        out.values.append_row(row);
        out.labels.push_back(minority);
        out.synthetic.push_back(true);
    }
    return out;
}

}  // namespace crlm
