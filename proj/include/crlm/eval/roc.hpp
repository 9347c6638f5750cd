#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crlm/core/error.hpp"
#include "crlm/core/text.hpp"

namespace crlm {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the (0,0) anchor
};

struct RocResult {
    double auc = 0.5;
    std::vector<RocPoint> curve;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::uint64_t concordant = 0;
    std::uint64_t tied = 0;
};

inline void require_binary(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), ErrorCode::DimensionMismatch,
            "scores (" + std::to_string(scores.size()) + ") and labels (" + std::to_string(labels.size()) +
                ") differ in length");
    for (int y : labels) require(y == 0 || y == 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
}

// AUC as (concordant + 0.5 * tied) / (n_pos * n_neg), with integer pair counts.
inline RocResult roc_auc(std::span<const double> scores, std::span<const int> labels, bool with_curve = true) {
    require_binary(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult r;
    for (int y : labels) (y ? r.n_pos : r.n_neg)++;
    require(r.n_pos > 0 && r.n_neg > 0, ErrorCode::SingleClass, "AUC needs both classes present");

    // Descending sweep: every positive in a score group beats the negatives still below it.
    std::uint64_t tp = 0, fp = 0;
    std::uint64_t neg_above = 0;
    if (with_curve) r.curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::uint64_t gp = 0, gn = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? gp : gn)++;
            ++j;
        }
        const std::uint64_t neg_below = r.n_neg - neg_above - gn;
        r.concordant += gp * neg_below;
        r.tied += gp * gn;
        neg_above += gn;
        tp += gp;
        fp += gn;
        if (with_curve)
            r.curve.push_back({static_cast<double>(fp) / static_cast<double>(r.n_neg),
                               static_cast<double>(tp) / static_cast<double>(r.n_pos), scores[order[i]]});
        i = j;
    }
    r.auc = (2.0 * static_cast<double>(r.concordant) + static_cast<double>(r.tied)) /
            (2.0 * static_cast<double>(r.n_pos) * static_cast<double>(r.n_neg));
    return r;
}

inline double auc(std::span<const double> scores, std::span<const int> labels) {
    return roc_auc(scores, labels, false).auc;
}

inline std::string roc_curve_csv(const RocResult& r, const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "fpr,tpr,threshold\n";
    for (const auto& p : r.curve)
        out += format_double(p.fpr) + "," + format_double(p.tpr) + "," +
               (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "\n";
    return out;
}

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Predicted positive iff score >= threshold.
inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
    require_binary(scores, labels);
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pos = scores[i] >= threshold;
        if (labels[i]) (pos ? c.tp : c.fn)++;
        else (pos ? c.fp : c.tn)++;
    }
    return c;
}

struct ThresholdMetrics {
    double threshold = 0.5;
    Confusion confusion;
    // Empty when the denominator is zero.
    std::optional<double> sensitivity, specificity, ppv, npv;
};

inline std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

inline ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                          double threshold) {
    ThresholdMetrics m;
    m.threshold = threshold;
    m.confusion = confusion_at(scores, labels, threshold);
    const auto& c = m.confusion;
    m.sensitivity = ratio(c.tp, c.tp + c.fn);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    m.ppv = ratio(c.tp, c.tp + c.fp);
    m.npv = ratio(c.tn, c.tn + c.fn);
    return m;
}

}  // namespace crlm
