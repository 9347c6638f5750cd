#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "crlm/core/svg.hpp"
#include "crlm/survival/kaplan_meier.hpp"

namespace crlm {

// Step plot of one or more KM curves with a number-at-risk table underneath.
inline std::string km_svg(const std::map<std::string, KmCurve>& curves, const std::string& title,
                          std::optional<double> log_rank_p = std::nullopt, const std::string& comment = "") {
    require(!curves.empty(), ErrorCode::EmptyInput, "km_svg needs at least one curve");
    double tmax = 0.0;
    for (const auto& [g, c] : curves)
        if (!c.subject_times.empty()) tmax = std::max(tmax, c.subject_times.back());
    if (tmax <= 0) tmax = 1.0;
    const double step = tmax > 60 ? 12.0 : (tmax > 24 ? 6.0 : (tmax > 6 ? 3.0 : tmax / 4));
    const double xmax = std::ceil(tmax / step) * step;
    svg::Frame f;
    f.x1 = xmax;
    const double table_top = f.top + f.height + 60;
    svg::Document doc(f.left + f.width + 160, table_top + 22.0 * static_cast<double>(curves.size()) + 30);
    if (!comment.empty()) doc.comment(comment);
    doc.text(f.left + f.width / 2, 22, title, "middle", 14);
    std::vector<double> xt;
    for (double t = 0; t <= xmax + 1e-9; t += step) xt.push_back(t);
    doc.axes(f, xt, svg::ticks(0, 1, 5), "Time (months)", "Survival probability");

    std::size_t k = 0;
    doc.text(f.left - 8, table_top - 6, "At risk", "end", 11);
    for (const auto& [g, c] : curves) {
        const std::string color = svg::palette(k);
        std::vector<std::pair<double, double>> pts{{f.px(0), f.py(1)}};
        double s = 1.0;
        for (const auto& st : c.steps) {
            pts.emplace_back(f.px(st.time), f.py(s));
            s = st.survival;
            pts.emplace_back(f.px(st.time), f.py(s));
        }
        pts.emplace_back(f.px(c.subject_times.empty() ? 0 : c.subject_times.back()), f.py(s));
        doc.polyline(pts, color);
        for (double ct : c.censor_times) {
            const double y = f.py(c.survival_at(ct));
            doc.line(f.px(ct), y - 4, f.px(ct), y + 4, color);
        }
        std::string label = g.empty() ? "all" : g;
        label += c.median ? " (median " + format_fixed(*c.median, 1) + ")" : " (median not reached)";
        doc.text(f.left + f.width + 10, f.top + 16 + 18.0 * static_cast<double>(k), label, "start", 11, color);
        const double ty = table_top + 16 + 22.0 * static_cast<double>(k);
        doc.text(f.left - 8, ty, g.empty() ? "all" : g, "end", 11, color);
        for (double t : xt) doc.text(f.px(t), ty, std::to_string(c.at_risk(t)), "middle", 11);
        ++k;
    }
    if (log_rank_p) {
        const std::string p = *log_rank_p < 1e-4 ? "< 0.0001" : "= " + format_fixed(*log_rank_p, 4);
        doc.text(f.left + 10, f.top + f.height - 10, "Log-rank p " + p, "start", 12);
    }
    return doc.str();
}

}  // namespace crlm
