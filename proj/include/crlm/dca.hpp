#pragma once

// Decision curve analysis: net benefit of a risk score across threshold
// probabilities against the treat-all and treat-none strategies.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crlm/core/svg.hpp"
#include "crlm/core/text.hpp"
#include "crlm/eval/roc.hpp"

namespace crlm {

inline void require_threshold_probability(double pt) {
    require(pt > 0.0 && pt < 1.0, ErrorCode::InvalidArgument, "threshold probability must lie in (0,1), got " + format_double(pt));
}

// Positive iff score >= pt. NB = TP/n - FP/n * pt/(1-pt).
inline double net_benefit(std::span<const double> scores, std::span<const int> labels, double pt) {
    require_threshold_probability(pt);
    require_binary(scores, labels);
    const auto c = confusion_at(scores, labels, pt);
    const double n = static_cast<double>(scores.size());
    return static_cast<double>(c.tp) / n - static_cast<double>(c.fp) / n * pt / (1.0 - pt);
}

inline double treat_all_net_benefit(double prevalence, double pt) {
    require_threshold_probability(pt);
    return prevalence - (1.0 - prevalence) * pt / (1.0 - pt);
}

// 0.05, 0.10, ..., 0.95
inline std::vector<double> default_pt_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(i / 20.0);
    return g;
}

inline std::vector<double> pt_grid(double lo, double hi, double step) {
    require(step > 0 && lo < hi, ErrorCode::InvalidArgument, "pt grid needs lo < hi and step > 0");
    std::vector<double> g;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) g.push_back(lo + static_cast<double>(i) * step);
    return g;
}

struct DecisionCurve {
    std::vector<double> thresholds;
    std::vector<double> net_benefit_model;
    std::vector<double> net_benefit_treat_all;
    std::vector<double> net_benefit_treat_none;
    double prevalence = 0.0;
    std::size_t n = 0;
};

inline DecisionCurve decision_curve(std::span<const double> scores, std::span<const int> labels,
                                    std::span<const double> grid) {
    require(!grid.empty(), ErrorCode::EmptyInput, "decision curve needs a non-empty threshold grid");
    require_binary(scores, labels);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require_threshold_probability(grid[i]);
        require(i == 0 || grid[i] > grid[i - 1], ErrorCode::InvalidArgument, "threshold grid must be ascending");
    }
    DecisionCurve dc;
    dc.n = scores.size();
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    dc.prevalence = static_cast<double>(pos) / static_cast<double>(dc.n);
    for (double pt : grid) {
        dc.thresholds.push_back(pt);
        dc.net_benefit_model.push_back(net_benefit(scores, labels, pt));
        dc.net_benefit_treat_all.push_back(treat_all_net_benefit(dc.prevalence, pt));
        dc.net_benefit_treat_none.push_back(0.0);
    }
    return dc;
}

struct TreatmentEfficiency {
    double treated_per_1000 = 0.0;
    double beneficial_per_1000 = 0.0;
    double unnecessary_per_1000 = 0.0;
    std::optional<double> efficiency;  // TP / (TP + FP); empty when nobody is treated
};

inline TreatmentEfficiency treatment_efficiency(std::uint64_t tp, std::uint64_t fp, std::uint64_t n) {
    require(n > 0, ErrorCode::EmptyInput, "treatment efficiency needs n > 0");
    require(tp + fp <= n, ErrorCode::InvalidArgument, "more treated than evaluated");
    TreatmentEfficiency e;
    const double dn = static_cast<double>(n);
    e.treated_per_1000 = 1000.0 * static_cast<double>(tp + fp) / dn;
    e.beneficial_per_1000 = 1000.0 * static_cast<double>(tp) / dn;
    e.unnecessary_per_1000 = 1000.0 * static_cast<double>(fp) / dn;
    if (tp + fp > 0) e.efficiency = static_cast<double>(tp) / static_cast<double>(tp + fp);
    return e;
}

inline TreatmentEfficiency treatment_efficiency(std::span<const double> scores, std::span<const int> labels, double pt) {
    require_threshold_probability(pt);
    require_binary(scores, labels);
    const auto c = confusion_at(scores, labels, pt);
    return treatment_efficiency(c.tp, c.fp, scores.size());
}

inline std::string decision_curve_csv(const DecisionCurve& dc, const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "pt,nb_model,nb_all,nb_none\n";
    for (std::size_t i = 0; i < dc.thresholds.size(); ++i)
        out += join_csv({format_double(dc.thresholds[i]), format_double(dc.net_benefit_model[i]),
                         format_double(dc.net_benefit_treat_all[i]), format_double(dc.net_benefit_treat_none[i])}) +
               "\n";
    return out;
}

inline std::string decision_curve_svg(const DecisionCurve& dc, const std::string& title, const std::string& comment = "") {
    svg::Frame f;
    f.x0 = 0;
    f.x1 = 1;
    f.y1 = std::max(0.05, std::ceil(dc.prevalence * 20.0 + 1e-9) / 20.0);
    f.y0 = -f.y1 / 2;
    svg::Document doc(f.left + f.width + 140, f.top + f.height + 60);
    if (!comment.empty()) doc.comment(comment);
    doc.text(f.left + f.width / 2, 22, title, "middle", 14);
    doc.axes(f, svg::ticks(0, 1, 10), svg::ticks(f.y0, f.y1, 6), "Threshold probability", "Net benefit");
    auto clip = [&](double y) { return f.py(std::clamp(y, f.y0, f.y1)); };
    auto curve = [&](const std::vector<double>& y, const std::string& color, const std::string& dash) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < y.size(); ++i) pts.emplace_back(f.px(dc.thresholds[i]), clip(y[i]));
        doc.polyline(pts, color, 1.5, dash);
    };
    curve(dc.net_benefit_model, svg::palette(0), "");
    curve(dc.net_benefit_treat_all, svg::palette(1), "6 3");
    curve(dc.net_benefit_treat_none, "#555", "2 3");
    doc.text(f.left + f.width + 10, f.top + 16, "Model", "start", 11, svg::palette(0));
    doc.text(f.left + f.width + 10, f.top + 34, "Treat all", "start", 11, svg::palette(1));
    doc.text(f.left + f.width + 10, f.top + 52, "Treat none", "start", 11, "#555");
    doc.text(f.left + f.width + 10, f.top + 76, "prevalence " + format_fixed(dc.prevalence, 3), "start", 11);
    return doc.str();
}

}  // namespace crlm
