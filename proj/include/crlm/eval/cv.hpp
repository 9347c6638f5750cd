#pragma once

// Stratified k-fold cross-validation with the whole preprocessing pipeline
// (imputation, encoding, SMOTE) refitted inside each training fold.

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "crlm/eval/roc.hpp"
#include "crlm/models/model.hpp"
#include "crlm/preprocess.hpp"

namespace crlm {

struct CvOptions {
    std::size_t n_folds = 5;
    bool smote = true;
    std::size_t smote_k = 5;
};

struct CvFold {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    double auc = std::numeric_limits<double>::quiet_NaN();  // NaN when the test fold lacks a class
    std::set<std::size_t> rows_read_during_fit;
};

struct CvResult {
    std::vector<CvFold> folds;
    double mean_auc = std::numeric_limits<double>::quiet_NaN();
    double sd_auc = std::numeric_limits<double>::quiet_NaN();  // n-1 denominator
    std::size_t folds_scored = 0;

    // Rows of a fold's test set that were read while fitting that fold.
    std::size_t test_rows_read_during_fit() const {
        std::size_t bad = 0;
        for (const auto& f : folds)
            for (auto r : f.test_rows) bad += f.rows_read_during_fit.count(r);
        return bad;
    }
};

inline CvResult cross_validate(const FeatureTable& table, std::span<const int> labels, const ModelSpec& spec,
                               const CvOptions& opt, std::uint64_t seed) {
    require(labels.size() == table.rows(), ErrorCode::DimensionMismatch, "cross_validate: labels do not match rows");
    require(opt.n_folds >= 2, ErrorCode::InvalidArgument, "cross_validate: n_folds must be >= 2");
    const auto fold_of = stratified_folds(labels, opt.n_folds, seed);
    CvResult res;
    std::vector<double> scored;
    for (std::size_t f = 0; f < opt.n_folds; ++f) {
        CvFold fold;
        for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? fold.test_rows : fold.train_rows).push_back(i);

        // Fit phase: every read of features or labels goes through the log.
        AccessLog log;
        const TableView train_view(table, fold.train_rows, &log);
        std::vector<int> ytr;
        for (auto i : fold.train_rows) {
            log.touch(i);
            ytr.push_back(labels[i]);
        }
        const auto npos = std::count(ytr.begin(), ytr.end(), 1);
        require(npos > 0 && npos < static_cast<long>(ytr.size()), ErrorCode::SingleClass,
                "fold " + std::to_string(f) + " has single-class training labels");
        const auto pipe = PreprocessPipeline::fit(train_view);
        const FeatureMatrix xtr = pipe.transform(train_view);
        const std::uint64_t fold_seed = derive_seed(seed, 0xc0 + f);
        TrainedModel model;
        if (opt.smote) {
            const auto sm = smote_oversample(xtr.values, ytr, opt.smote_k, fold_seed);
            model = fit_model(spec, sm.values, sm.labels, fold_seed);
        } else {
            model = fit_model(spec, xtr.values, ytr, fold_seed);
        }
        fold.rows_read_during_fit = std::move(log.rows_read);

        // Evaluation phase.
        const FeatureMatrix xte = pipe.transform(TableView(table, fold.test_rows));
        std::vector<int> yte;
        for (auto i : fold.test_rows) yte.push_back(labels[i]);
        const auto tp = std::count(yte.begin(), yte.end(), 1);
        if (tp > 0 && tp < static_cast<long>(yte.size())) {
            fold.auc = auc(predict_all(model, xte.values), yte);
            scored.push_back(fold.auc);
        }
        res.folds.push_back(std::move(fold));
    }
    res.folds_scored = scored.size();
    if (!scored.empty()) res.mean_auc = numeric::mean(scored);
    if (scored.size() >= 2) res.sd_auc = numeric::sample_sd(scored);
    return res;
}

}  // namespace crlm
