#include "app.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"

#include "crlm/crlm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace crlm::cli {

std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

namespace {

// Collects the files a command writes together with their content hashes.
struct Artifacts {
    fs::path dir;
    std::string hash;
    std::map<std::string, std::string> written;

    std::string tag() const { return "config_hash=" + hash; }

    void put(const std::string& name, const std::string& content) {
        write_file((dir / name).string(), content);
        written[name] = hex64(fnv1a(content));
    }
    void csv(const std::string& name, const std::string& body) { put(name, "# " + tag() + "\n" + body); }
    void text(const std::string& name, const std::string& body) { put(name, "# " + tag() + "\n" + body); }
    void json_file(const std::string& name, json j) {
        j["config_hash"] = hash;
        put(name, j.dump(2) + "\n");
    }
};

using Body = std::function<void(const json& cfg, Artifacts& out)>;

struct Command {
    std::string name;
    std::string help;
    json defaults;
    std::vector<std::string> path_keys;
    std::vector<std::string> required;
    Body body;
};

const std::map<std::string, std::string>& option_help() {
    static const std::map<std::string, std::string> h = {
        {"seed", "random seed"},
        {"n", "number of patients"},
        {"signal", "planted signal: metabolic | none"},
        {"cohort", "cohort CSV"},
        {"schema", "schema JSON"},
        {"features", "wide radiomic feature CSV (id, feature...) merged as baseline columns"},
        {"scores", "scores CSV written by train-eval"},
        {"inputs", "CSV of patient_id,volume,mask sidecar paths"},
        {"phantoms", "number of synthetic phantom patients (instead of --inputs)"},
        {"phantom_lesions", "lesions per phantom"},
        {"bin_width", "fixed bin width in HU"},
        {"n_bins", "fixed bin count (overrides bin width when > 0)"},
        {"ccc_threshold", "CCC threshold against the eroded-mask arm (0 disables)"},
        {"aggregate", "multi-lesion aggregation: weighted | largest"},
        {"missingness_threshold", "drop variables with a larger missing fraction"},
        {"include_postop", "keep postoperative and outcome columns (leakage diagnostic)"},
        {"horizons", "comma-separated horizons in months"},
        {"horizon", "horizon in months"},
        {"train_fraction", "stratified train fraction"},
        {"smote", "oversample the training minority class"},
        {"smote_k", "SMOTE neighbours"},
        {"model", "voting | lasso | random_forest | gradient_boosting"},
        {"bootstrap_iterations", "bootstrap resamples for the AUC CI"},
        {"decision_threshold", "probability threshold for sensitivity/specificity"},
        {"importance_threshold", "leakage audit importance threshold"},
        {"diagnostic_audit", "also report an all-columns diagnostic fit"},
        {"cv_folds", "cross-validation folds on the training split (0 skips)"},
        {"endpoint", "os | dfs"},
        {"cox_covariates", "comma-separated cohort variables for the Cox model"},
        {"standardize", "z-score continuous Cox covariates"},
        {"group_by", "score | metabolic"},
        {"pt_lo", "lowest threshold probability"},
        {"pt_hi", "highest threshold probability"},
        {"pt_step", "threshold step"},
        {"efficiency_pt", "threshold for the treatment-efficiency summary"},
    };
    return h;
}

std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

json parse_option_value(const std::string& key, const json& def, const std::string& raw) {
    auto number = [&](const std::string& s) -> json {
        const auto d = parse_double(s);
        require(d.has_value(), ErrorCode::InvalidArgument, flag_name(key) + ": '" + s + "' is not a number");
        return *d;
    };
    if (key == "seed") {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(raw, &used);
            require(used == raw.size(), ErrorCode::InvalidArgument, "");
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "--seed: '" + raw + "' is not a non-negative integer");
        }
    }
    if (def.is_number_integer() || def.is_number_unsigned()) {
        const json v = number(raw);
        const double d = v.get<double>();
        require(d == std::floor(d) && d >= 0, ErrorCode::InvalidArgument, flag_name(key) + " needs a non-negative integer");
        return static_cast<std::uint64_t>(d);
    }
    if (def.is_number_float()) return number(raw);
    if (def.is_array()) {
        const bool numeric = !def.empty() && def[0].is_number();
        json arr = json::array();
        for (const auto& part : split_csv_line(raw)) {
            const auto t = std::string(trim(part));
            if (t.empty()) continue;
            arr.push_back(numeric ? number(t) : json(t));
        }
        return arr;
    }
    return raw;
}

json load_json_file(const std::string& path, const std::string& what) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, what + " " + path + ": " + e.what());
    }
}

ModelSpec model_from_config(const json& m) {
    if (m.is_object()) return model_spec_from_json(m);
    const auto type = parse_model_type(m.get<std::string>());
    switch (type) {
        case ModelType::lasso: return ModelSpec::make_lasso();
        case ModelType::random_forest: return ModelSpec::make_forest();
        case ModelType::gradient_boosting: return ModelSpec::make_boosting();
        case ModelType::voting: return default_model_spec();
    }
    return default_model_spec();
}

Cohort load_cohort(const json& cfg) {
    Cohort c = load_cohort_csv(cfg["cohort"].get<std::string>(), cfg["schema"].get<std::string>());
    if (cfg.contains("features") && cfg["features"].is_string())
        c = with_feature_columns(c, read_file(cfg["features"].get<std::string>()));
    return c;
}

struct ScoreRow {
    std::string id;
    int label = 0;
    double score = 0.0;
};

std::vector<ScoreRow> load_scores(const std::string& path, double horizon) {
    const auto rows = parse_csv_text(read_file(path));
    require(!rows.empty(), ErrorCode::ParseError, path + ": empty scores file");
    const auto& h = rows[0];
    auto col = [&](const std::string& name) {
        const auto it = std::find(h.begin(), h.end(), name);
        require(it != h.end(), ErrorCode::MissingColumn, path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - h.begin());
    };
    const std::size_t ch = col("horizon"), ci = col("id"), cl = col("label"), cs = col("score");
    std::vector<ScoreRow> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require(rows[r].size() == h.size(), ErrorCode::ParseError, path + ": ragged row " + std::to_string(r));
        const auto hv = parse_double(rows[r][ch]);
        const auto sv = parse_double(rows[r][cs]);
        require(hv && sv, ErrorCode::ParseError, path + ": non-numeric horizon or score in row " + std::to_string(r));
        if (*hv != horizon) continue;
        require(rows[r][cl] == "0" || rows[r][cl] == "1", ErrorCode::ParseError, path + ": label must be 0/1");
        out.push_back({rows[r][ci], rows[r][cl] == "1" ? 1 : 0, *sv});
    }
    require(!out.empty(), ErrorCode::EmptyInput, path + ": no scores for horizon " + format_double(horizon));
    return out;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const json& cfg, Artifacts& out) {
    const auto cohort = generate_synthetic_cohort(cfg["n"].get<std::size_t>(), cfg["seed"].get<std::uint64_t>(),
                                                  parse_signal(cfg["signal"].get<std::string>()));
    out.csv("cohort.csv", write_cohort_csv(cohort));
    out.put("schema.json", schema_to_json(cohort.schema()).dump(2) + "\n");
    const std::string summary = render_summary(summarize_cohort(cohort));
    out.text("summary.txt", summary);
    std::cout << summary;
}

void cmd_extract(const json& cfg, Artifacts& out) {
    using namespace radiomics;
    ExtractionOptions opt;
    if (cfg["n_bins"].get<std::size_t>() > 0)
        opt.discretization = DiscretizationSpec::fixed_count(static_cast<int>(cfg["n_bins"].get<std::size_t>()));
    else
        opt.discretization = DiscretizationSpec::fixed_width(cfg["bin_width"].get<double>());
    const double ccc_threshold = cfg["ccc_threshold"].get<double>();
    const std::string aggregate = cfg["aggregate"].get<std::string>();
    require(aggregate == "weighted" || aggregate == "largest", ErrorCode::InvalidArgument,
            "--aggregate must be 'weighted' or 'largest'");

    // patient id -> (volume, masks)
    std::map<std::string, std::pair<HuVolume, std::vector<LesionMask>>> patients;
    if (cfg["inputs"].is_string()) {
        const std::string list = cfg["inputs"].get<std::string>();
        const auto rows = parse_csv_text(read_file(list));
        require(!rows.empty() && rows[0] == std::vector<std::string>{"patient_id", "volume", "mask"}, ErrorCode::ParseError,
                list + ": header must be patient_id,volume,mask");
        const fs::path base = fs::path(list).parent_path();
        std::map<std::string, std::string> volume_of;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            require(rows[r].size() == 3, ErrorCode::ParseError, list + ": ragged row " + std::to_string(r));
            auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
            const std::string& pid = rows[r][0];
            const std::string vpath = resolve(rows[r][1]);
            auto it = patients.find(pid);
            if (it == patients.end()) {
                it = patients.emplace(pid, std::make_pair(read_volume(vpath), std::vector<LesionMask>{})).first;
                volume_of[pid] = vpath;
            }
            require(volume_of[pid] == vpath, ErrorCode::InvalidArgument, "patient '" + pid + "' lists two volumes");
            auto mask = read_mask(resolve(rows[r][2]));
            require_same_dims(it->second.first.dims(), mask.dims());
            it->second.second.push_back(std::move(mask));
        }
    } else {
        const auto count = cfg["phantoms"].get<std::size_t>();
        require(count > 0, ErrorCode::InvalidArgument, "extract needs --inputs or --phantoms N");
        PhantomSpec spec;
        spec.n_lesions = static_cast<int>(cfg["phantom_lesions"].get<std::size_t>());
        for (std::size_t i = 0; i < count; ++i) {
            auto ph = make_phantom(derive_seed(cfg["seed"].get<std::uint64_t>(), i), spec);
            patients.emplace(crlm::detail::patient_id(i, count), std::make_pair(std::move(ph.volume), std::move(ph.masks)));
        }
    }
    require(!patients.empty(), ErrorCode::EmptyInput, "no patients to extract");

    std::vector<FeatureRow> long_rows;
    std::vector<std::string> ids;
    std::vector<RadiomicFeatureSet> primary, eroded;
    auto aggregate_arm = [&](const HuVolume& vol, const std::vector<LesionMask>& masks, bool erode,
                             const std::string& pid) {
        std::vector<RadiomicFeatureSet> sets;
        std::vector<double> volumes;
        for (const auto& m : masks) {
            const LesionMask use = erode ? erode_mask(m) : m;
            auto f = extract_lesion_features(vol, use, opt);
            volumes.push_back(lesion_volume_mm3(f));
            if (!erode) {
                auto rows = to_rows(pid, f);
                long_rows.insert(long_rows.end(), rows.begin(), rows.end());
            }
            sets.push_back(std::move(f));
        }
        auto agg = aggregate_lesions(sets, volumes);
        return aggregate == "weighted" ? agg.weighted : agg.largest;
    };
    const bool do_ccc = ccc_threshold > 0 && patients.size() >= 2;
    for (const auto& [pid, pm] : patients) {
        ids.push_back(pid);
        primary.push_back(aggregate_arm(pm.first, pm.second, false, pid));
        if (do_ccc) eroded.push_back(aggregate_arm(pm.first, pm.second, true, pid));
    }
    out.csv("features_long.csv", features_long_csv(long_rows));

    std::vector<std::string> names;
    for (const auto& f : primary[0].features) names.push_back(f.name);
    auto to_matrix = [&](const std::vector<RadiomicFeatureSet>& sets) {
        Matrix m(sets.size(), names.size());
        for (std::size_t i = 0; i < sets.size(); ++i)
            for (std::size_t j = 0; j < names.size(); ++j) m(i, j) = sets[i].at(names[j]);
        return m;
    };
    const Matrix a = to_matrix(primary);
    std::vector<std::size_t> keep(names.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    if (do_ccc) {
        const auto rep = ccc_filter(a, to_matrix(eroded), names, ccc_threshold);
        std::string body = "feature,ccc,retained\n";
        keep.clear();
        for (std::size_t j = 0; j < rep.features.size(); ++j) {
            const bool kept = std::find(rep.retained.begin(), rep.retained.end(), rep.features[j]) != rep.retained.end();
            if (kept) keep.push_back(j);
            body += join_csv({rep.features[j], format_double(rep.values[j]), kept ? "1" : "0"}) + "\n";
        }
        out.csv("ccc_report.csv", body);
        std::cout << rep.retained.size() << " of " << names.size() << " features retained at CCC >= "
                  << format_double(ccc_threshold) << "\n";
    }
    std::vector<std::string> header{"id"};
    for (auto j : keep) header.push_back(names[j]);
    std::string wide = join_csv(header) + "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::string> row{ids[i]};
        for (auto j : keep) row.push_back(format_double(a(i, j)));
        wide += join_csv(row) + "\n";
    }
    out.csv("features_wide.csv", wide);
    std::cout << ids.size() << " patients, " << long_rows.size() / std::max<std::size_t>(1, names.size())
              << " lesions, " << names.size() << " features per lesion\n";
}

void cmd_preprocess(const json& cfg, Artifacts& out) {
    const Cohort cohort = load_cohort(cfg);
    const auto miss = drop_high_missingness(cohort, cfg["missingness_threshold"].get<double>());
    out.csv("removed_missingness.csv", removal_manifest_csv(miss.removed, cfg["missingness_threshold"].get<double>()));
    FeatureTable table = FeatureTable::from_cohort(miss.cohort);
    if (!cfg["include_postop"].get<bool>()) {
        auto gate = baseline_only_filter(table);
        require(!gate.empty_result, ErrorCode::EmptyInput, "no baseline columns remain after filtering");
        out.csv("removed_by_tag.csv", audit_manifest_csv(gate.removed));
        table = std::move(gate.data);
    }
    const auto pipe = PreprocessPipeline::fit(TableView::all(table));
    const auto design = pipe.transform(table);
    out.csv("design_matrix.csv", write_feature_matrix_csv(design));
    out.json_file("fit_state.json", pipe.to_json());
    if (cohort.find("nash_score") && cohort.find("bmi") && cohort.find("liver_hu")) {
        const auto scores = metabolic_score(cohort);
        std::string body = "id,metabolic_score,tertile\n";
        for (std::size_t i = 0; i < scores.size(); ++i)
            body += join_csv({cohort.records()[i].id, format_double(scores[i].score), to_string(scores[i].tertile)}) + "\n";
        out.csv("metabolic_scores.csv", body);
    }
    std::cout << design.rows() << " rows x " << design.cols() << " encoded columns; " << miss.removed.size()
              << " variables dropped for missingness\n";
}

TrainEvalConfig train_eval_config(const json& cfg) {
    TrainEvalConfig t;
    t.horizons = cfg["horizons"].get<std::vector<double>>();
    t.missingness_threshold = cfg["missingness_threshold"].get<double>();
    t.train_fraction = cfg["train_fraction"].get<double>();
    t.smote = cfg["smote"].get<bool>();
    t.smote_k = cfg["smote_k"].get<std::size_t>();
    t.model = model_from_config(cfg["model"]);
    t.bootstrap_iterations = cfg["bootstrap_iterations"].get<std::size_t>();
    t.decision_threshold = cfg["decision_threshold"].get<double>();
    t.importance_threshold = cfg["importance_threshold"].get<double>();
    t.include_postop = cfg["include_postop"].get<bool>();
    t.diagnostic_audit = cfg["diagnostic_audit"].get<bool>();
    t.cv_folds = cfg["cv_folds"].get<std::size_t>();
    return t;
}

json leakage_json(const TrainEvalResult& r) {
    json j;
    bool leaked = false;
    for (const auto& h : r.horizons) {
        j["horizons"][horizon_key(h.horizon)] = audit_to_json(h.audit);
        if (h.unfiltered) j["horizons"][horizon_key(h.horizon)]["unfiltered_diagnostic"] = audit_to_json(*h.unfiltered);
        leaked = leaked || h.audit.verdict == Verdict::leaked;
    }
    j["verdict"] = leaked ? "leaked" : "clean";
    return j;
}

std::string leakage_text(const TrainEvalResult& r) {
    std::string s;
    for (const auto& h : r.horizons) {
        s += "[" + horizon_key(h.horizon) + "] " + audit_to_text(h.audit);
        if (h.unfiltered) s += "[" + horizon_key(h.horizon) + "] unfiltered diagnostic, " + audit_to_text(*h.unfiltered);
    }
    return s;
}

void cmd_train_eval(const json& cfg, Artifacts& out) {
    const Cohort cohort = load_cohort(cfg);
    const auto t = train_eval_config(cfg);
    const auto seed = cfg["seed"].get<std::uint64_t>();
    const auto r = train_eval(cohort, t, seed);
    auto report = evaluation_report_json(r, t, seed);
    report["config"] = cfg;
    out.json_file("evaluation.json", report);
    const std::string text = evaluation_report_text(r);
    out.text("evaluation.txt", text);
    auto models = trained_models_json(r);
    models["config"] = cfg;
    out.json_file("models.json", models);
    out.csv("scores.csv", test_scores_csv(r));
    for (const auto& h : r.horizons) {
        out.csv("roc_" + horizon_key(h.horizon) + ".csv", roc_curve_csv(h.roc));
        out.csv("bootstrap_" + horizon_key(h.horizon) + ".csv", bootstrap_samples_csv(h.ci));
    }
    if (!r.removed_by_tag.empty()) out.csv("removed_by_tag.csv", audit_manifest_csv(r.removed_by_tag));
    out.json_file("leakage.json", leakage_json(r));
    out.text("leakage.txt", leakage_text(r));
    std::cout << text;
}

void cmd_audit(const json& cfg, Artifacts& out) {
    const Cohort cohort = load_cohort(cfg);
    TrainEvalConfig t;
    t.horizons = {cfg["horizon"].get<double>()};
    t.missingness_threshold = cfg["missingness_threshold"].get<double>();
    t.model = model_from_config(cfg["model"]);
    t.bootstrap_iterations = 100;
    t.importance_threshold = cfg["importance_threshold"].get<double>();
    t.include_postop = cfg["include_postop"].get<bool>();
    const auto r = train_eval(cohort, t, cfg["seed"].get<std::uint64_t>());
    out.json_file("leakage.json", leakage_json(r));
    const std::string text = leakage_text(r);
    out.text("leakage.txt", text);
    std::cout << text;
}

void cmd_survival(const json& cfg, Artifacts& out) {
    const Cohort cohort = load_cohort(cfg);
    SurvivalConfig sc;
    sc.endpoint = parse_endpoint(cfg["endpoint"].get<std::string>());
    sc.cox_covariates = cfg["cox_covariates"].get<std::vector<std::string>>();
    sc.standardize = cfg["standardize"].get<bool>();
    std::map<std::string, double> scores;
    const std::string by = cfg["group_by"].get<std::string>();
    if (by == "metabolic") {
        const auto ms = metabolic_score(cohort);
        for (std::size_t i = 0; i < ms.size(); ++i) scores[cohort.records()[i].id] = ms[i].score;
    } else {
        require(by == "score", ErrorCode::InvalidArgument, "--group-by must be 'score' or 'metabolic'");
        require(cfg["scores"].is_string(), ErrorCode::InvalidArgument, "--scores is required with --group-by score");
        for (const auto& s : load_scores(cfg["scores"].get<std::string>(), cfg["horizon"].get<double>()))
            scores[s.id] = s.score;
    }
    const auto a = survival_by_risk(cohort, scores, sc);
    std::string km;
    bool first = true;
    for (const auto& [g, c] : a.curves) {
        std::string part = km_csv(c, g);
        if (!first) part.erase(0, part.find('\n') + 1);
        km += part;
        first = false;
    }
    out.csv("km.csv", km);
    const std::string title = std::string(sc.endpoint == Endpoint::os ? "Overall" : "Disease-free") + " survival by risk group";
    out.put("km.svg", km_svg(a.curves, title, a.log_rank ? std::optional<double>(a.log_rank->p_value) : std::nullopt,
                             out.tag()));
    auto sj = survival_report_json(a);
    out.json_file("survival.json", sj);
    if (a.cox) {
        out.json_file("cox.json", cox_to_json(*a.cox));
        out.text("cox.txt", cox_to_text(*a.cox));
        std::cout << cox_to_text(*a.cox);
        for (const auto& w : a.cox->warnings) std::cerr << "warning: " << w << "\n";
    } else if (!a.cox_error.empty()) {
        std::cerr << "cox model not fitted: " << a.cox_error << "\n";
    }
    for (const auto& [g, c] : a.curves)
        std::cout << g << ": n=" << c.n << " median "
                  << (c.median ? format_fixed(*c.median, 1) + " months" : std::string("not reached")) << "\n";
    if (a.log_rank)
        std::cout << "log-rank chi2=" << format_fixed(a.log_rank->chi_square, 3) << " df=" << a.log_rank->df
                  << " p=" << format_double(a.log_rank->p_value) << "\n";
    else
        std::cerr << "log-rank test refused: " << a.log_rank_error << "\n";
}

void cmd_dca(const json& cfg, Artifacts& out) {
    const auto rows = load_scores(cfg["scores"].get<std::string>(), cfg["horizon"].get<double>());
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& r : rows) {
        s.push_back(r.score);
        y.push_back(r.label);
    }
    const auto grid = pt_grid(cfg["pt_lo"].get<double>(), cfg["pt_hi"].get<double>(), cfg["pt_step"].get<double>());
    const auto dc = decision_curve(s, y, grid);
    out.csv("dca.csv", decision_curve_csv(dc));
    out.put("dca.svg", decision_curve_svg(dc, "Decision curve, " + horizon_key(cfg["horizon"].get<double>()) + " horizon",
                                          out.tag()));
    const double ept = cfg["efficiency_pt"].get<double>();
    const auto eff = treatment_efficiency(s, y, ept);
    json j;
    j["prevalence"] = dc.prevalence;
    j["n"] = dc.n;
    j["thresholds"] = dc.thresholds;
    j["net_benefit_model"] = dc.net_benefit_model;
    j["net_benefit_treat_all"] = dc.net_benefit_treat_all;
    j["treatment_efficiency"] = {{"pt", ept},
                                 {"treated_per_1000", eff.treated_per_1000},
                                 {"beneficial_per_1000", eff.beneficial_per_1000},
                                 {"unnecessary_per_1000", eff.unnecessary_per_1000},
                                 {"efficiency", eff.efficiency ? json(*eff.efficiency) : json(nullptr)}};
    out.json_file("dca.json", j);
    std::cout << "prevalence " << format_fixed(dc.prevalence, 3) << "; at pt " << format_double(ept) << ": treated "
              << format_fixed(eff.treated_per_1000, 1) << "/1000, efficiency "
              << (eff.efficiency ? format_fixed(*eff.efficiency, 3) : std::string("undefined (no positives)")) << "\n";
}

const std::vector<Command>& commands() {
    static const std::vector<Command> cmds = {
        {"generate", "Generate a synthetic cohort (CSV + schema JSON)",
         {{"seed", 1}, {"n", 197}, {"signal", "metabolic"}}, {}, {}, cmd_generate},
        {"extract", "Extract radiomic features from volumes and lesion masks",
         {{"seed", 1},
          {"inputs", nullptr},
          {"phantoms", 0},
          {"phantom_lesions", 2},
          {"bin_width", 25.0},
          {"n_bins", 0},
          {"ccc_threshold", 0.85},
          {"aggregate", "weighted"}},
         {"inputs"}, {}, cmd_extract},
        {"preprocess", "Missingness filter, baseline gate, imputation and encoding",
         {{"cohort", nullptr},
          {"schema", nullptr},
          {"features", nullptr},
          {"missingness_threshold", 0.30},
          {"include_postop", false}},
         {"cohort", "schema", "features"}, {"cohort", "schema"}, cmd_preprocess},
        {"train-eval", "Train per-horizon models and evaluate them",
         {{"seed", nullptr},
          {"cohort", nullptr},
          {"schema", nullptr},
          {"features", nullptr},
          {"horizons", {3.0, 6.0, 12.0}},
          {"missingness_threshold", 0.30},
          {"train_fraction", 0.7},
          {"smote", true},
          {"smote_k", 5},
          {"model", "voting"},
          {"bootstrap_iterations", 1000},
          {"decision_threshold", 0.5},
          {"importance_threshold", 0.5},
          {"include_postop", false},
          {"diagnostic_audit", true},
          {"cv_folds", 5}},
         {"cohort", "schema", "features"}, {"seed", "cohort", "schema"}, cmd_train_eval},
        {"survival", "Kaplan-Meier, log-rank and Cox by risk group",
         {{"cohort", nullptr},
          {"schema", nullptr},
          {"scores", nullptr},
          {"horizon", 3.0},
          {"endpoint", "os"},
          {"cox_covariates", json::array()},
          {"standardize", true},
          {"group_by", "score"}},
         {"cohort", "schema", "scores"}, {"cohort", "schema"}, cmd_survival},
        {"dca", "Decision curve analysis of test-set scores",
         {{"scores", nullptr},
          {"horizon", 3.0},
          {"pt_lo", 0.05},
          {"pt_hi", 0.95},
          {"pt_step", 0.05},
          {"efficiency_pt", 0.3}},
         {"scores"}, {"scores"}, cmd_dca},
        {"audit", "Temporal leakage audit for one horizon",
         {{"seed", 1},
          {"cohort", nullptr},
          {"schema", nullptr},
          {"features", nullptr},
          {"horizon", 3.0},
          {"missingness_threshold", 0.30},
          {"model", "voting"},
          {"importance_threshold", 0.5},
          {"include_postop", false}},
         {"cohort", "schema", "features"}, {"cohort", "schema"}, cmd_audit},
    };
    return cmds;
}

const Command& find_command(const std::string& name) {
    for (const auto& c : commands())
        if (c.name == name) return c;
    throw Error(ErrorCode::InvalidArgument, "unknown command '" + name + "'");
}

json input_hashes(const Command& c, const json& cfg) {
    json j = json::object();
    for (const auto& k : c.path_keys)
        if (cfg.contains(k) && cfg[k].is_string()) j[k] = hex64(fnv1a(read_file(cfg[k].get<std::string>())));
    return j;
}

// Runs a resolved config and writes the manifest.
void execute(const Command& c, const json& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    require(fs::is_directory(out_dir), ErrorCode::IoError, "cannot create output directory " + out_dir.string());
    Artifacts a{out_dir, config_hash(cfg), {}};
    const json inputs = input_hashes(c, cfg);
    c.body(cfg, a);
    json manifest;
    manifest["format"] = "crlm-manifest";
    manifest["command"] = c.name;
    manifest["config"] = cfg;
    manifest["config_hash"] = a.hash;
    manifest["inputs"] = inputs;
    manifest["artifacts"] = a.written;
    write_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

json resolve_config(const Command& c, const std::string& config_path, const std::map<std::string, std::string>& flags,
                    const std::map<std::string, bool>& bools, const std::string& model_spec_path) {
    json cfg = c.defaults;
    if (!config_path.empty()) {
        const json file = load_json_file(config_path, "config");
        require(file.is_object(), ErrorCode::ParseError, "config " + config_path + " must be a JSON object");
        for (const auto& [k, v] : file.items()) {
            if (k == "command" || k == "config_hash") continue;
            require(cfg.contains(k), ErrorCode::InvalidArgument, "config key '" + k + "' is not used by " + c.name);
            cfg[k] = v;
        }
    }
    for (const auto& [k, raw] : flags) cfg[k] = parse_option_value(k, c.defaults[k], raw);
    for (const auto& [k, v] : bools) cfg[k] = v;
    if (!model_spec_path.empty()) cfg["model"] = load_json_file(model_spec_path, "model spec");
    for (const auto& k : c.path_keys)
        if (cfg.contains(k) && cfg[k].is_string()) {
            const fs::path p(cfg[k].get<std::string>());
            require(fs::exists(p), ErrorCode::IoError, flag_name(k) + ": file not found: " + p.string());
            cfg[k] = fs::weakly_canonical(fs::absolute(p)).string();
        }
    for (const auto& k : c.required)
        require(cfg.contains(k) && !cfg[k].is_null(), ErrorCode::InvalidArgument,
                c.name + ": " + flag_name(k) + " is required (flag or config key '" + k + "')");
    if (c.name == "train-eval" || c.name == "audit") model_from_config(cfg["model"]);  // validate early
    cfg["command"] = c.name;
    return cfg;
}

int verify(const std::string& manifest_path) {
    fs::path mp(manifest_path);
    if (fs::is_directory(mp)) mp /= "manifest.json";
    const json m = load_json_file(mp.string(), "manifest");
    require(m.value("format", "") == "crlm-manifest", ErrorCode::ParseError, mp.string() + " is not a crlm manifest");
    const Command& c = find_command(m.at("command").get<std::string>());
    const json cfg = m.at("config");
    require(config_hash(cfg) == m.at("config_hash").get<std::string>(), ErrorCode::ParseError,
            "manifest config does not match its config hash");
    int bad = 0;
    const json inputs = input_hashes(c, cfg);
    for (const auto& [k, h] : m.at("inputs").items()) {
        if (!inputs.contains(k) || inputs[k] != h) {
            std::cout << "input changed: " << k << "\n";
            ++bad;
        }
    }
    if (bad) return verify_mismatch;
    const fs::path tmp = fs::temp_directory_path() / ("crlm-verify-" + m.at("config_hash").get<std::string>() + "-" +
                                                      hex64(fnv1a(mp.string())));
    fs::remove_all(tmp);
    {
        // Replay quietly.
        std::streambuf* saved = std::cout.rdbuf();
        std::ostringstream sink;
        std::cout.rdbuf(sink.rdbuf());
        try {
            execute(c, cfg, tmp);
        } catch (...) {
            std::cout.rdbuf(saved);
            fs::remove_all(tmp);
            throw;
        }
        std::cout.rdbuf(saved);
    }
    const json replay = load_json_file((tmp / "manifest.json").string(), "manifest");
    const json& want = m.at("artifacts");
    const json& got = replay.at("artifacts");
    for (const auto& [name, h] : want.items()) {
        if (!got.contains(name)) {
            std::cout << "missing on replay: " << name << "\n";
            ++bad;
        } else if (got[name] != h) {
            std::cout << "differs: " << name << " (" << h.get<std::string>() << " vs " << got[name].get<std::string>() << ")\n";
            ++bad;
        }
    }
    for (const auto& [name, h] : got.items())
        if (!want.contains(name)) {
            std::cout << "extra on replay: " << name << "\n";
            ++bad;
        }
    fs::remove_all(tmp);
    if (bad) return verify_mismatch;
    std::cout << "verified " << want.size() << " artifacts, config_hash " << m.at("config_hash").get<std::string>() << "\n";
    return ok;
}

int exit_code_for(const Error& e) { return e.code() == ErrorCode::NonConvergence ? non_convergence : input_error; }

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Leakage-safe recurrence prediction toolkit for colorectal liver metastases"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    struct Parsed {
        CLI::App* sub = nullptr;
        const Command* cmd = nullptr;
        std::string config, out = ".", model_spec;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> bools;
        std::map<std::string, CLI::Option*> opts;
    };
    std::vector<std::unique_ptr<Parsed>> parsed;
    for (const auto& c : commands()) {
        auto p = std::make_unique<Parsed>();
        p->cmd = &c;
        p->sub = app.add_subcommand(c.name, c.help);
        p->sub->add_option("--config", p->config, "JSON config; flags override its keys");
        p->sub->add_option("--out", p->out, "output directory")->capture_default_str();
        if (c.name == "train-eval" || c.name == "audit")
            p->sub->add_option("--model-spec", p->model_spec, "JSON model spec file (overrides --model)");
        for (const auto& [k, def] : c.defaults.items()) {
            const auto& help = option_help().at(k);
            if (def.is_boolean()) {
                p->bools[k] = def.get<bool>();
                p->opts[k] = p->sub->add_flag(flag_name(k) + ",!--no-" + flag_name(k).substr(2), p->bools[k], help);
            } else {
                p->values[k];
                p->opts[k] = p->sub->add_option(flag_name(k), p->values[k], help);
            }
        }
        parsed.push_back(std::move(p));
    }
    std::string manifest;
    auto* ver = app.add_subcommand("verify", "Replay a run from its manifest and compare artifact hashes");
    ver->add_option("--manifest", manifest, "manifest.json or the output directory holding it")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input_error;
    }
    try {
        if (ver->parsed()) return verify(manifest);
        for (const auto& p : parsed) {
            if (!p->sub->parsed()) continue;
            std::map<std::string, std::string> flags;
            std::map<std::string, bool> bools;
            for (const auto& [k, o] : p->opts)
                if (o->count() > 0) {
                    if (p->bools.count(k)) bools[k] = p->bools[k];
                    else flags[k] = p->values[k];
                }
            const json cfg = resolve_config(*p->cmd, p->config, flags, bools, p->model_spec);
            execute(*p->cmd, cfg, p->out);
            return ok;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return input_error;
    }
    return input_error;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"crlm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace crlm::cli
