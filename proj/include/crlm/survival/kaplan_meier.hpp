#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crlm/core/numeric.hpp"
#include "crlm/core/text.hpp"
#include "crlm/survival/dataset.hpp"

namespace crlm {

struct KmStep {
    double time = 0.0;
    double survival = 1.0;
    std::size_t n_at_risk = 0;
    std::size_t n_events = 0;
    std::size_t n_censored = 0;  // censored exactly at this time
    double variance = 0.0;       // Greenwood
};

// Steps sit at distinct event times only.
struct KmCurve {
    std::vector<KmStep> steps;
    std::optional<double> median;
    std::size_t n = 0;
    std::vector<double> censor_times;

    double survival_at(double t) const {
        double s = 1.0;
        for (const auto& st : steps) {
            if (st.time > t) break;
            s = st.survival;
        }
        return s;
    }

    std::vector<double> subject_times;  // sorted

    // Subjects still under observation at t (time >= t).
    std::size_t at_risk(double t) const {
        return static_cast<std::size_t>(subject_times.end() -
                                        std::lower_bound(subject_times.begin(), subject_times.end(), t));
    }
};

inline KmCurve kaplan_meier(std::span<const double> time, std::span<const int> event) {
    require(!time.empty(), ErrorCode::EmptyInput, "kaplan_meier on empty data");
    require(time.size() == event.size(), ErrorCode::DimensionMismatch, "time and event differ in length");
    std::map<double, std::pair<std::size_t, std::size_t>> by_time;  // time -> (events, censored)
    for (std::size_t i = 0; i < time.size(); ++i) {
        require(std::isfinite(time[i]) && time[i] >= 0, ErrorCode::InvalidArgument, "negative or non-finite time");
        require(event[i] == 0 || event[i] == 1, ErrorCode::InvalidArgument, "event indicator must be 0 or 1");
        auto& slot = by_time[time[i]];
        (event[i] ? slot.first : slot.second)++;
    }
    KmCurve c;
    c.n = time.size();
    c.subject_times.assign(time.begin(), time.end());
    std::sort(c.subject_times.begin(), c.subject_times.end());
    std::size_t at_risk = c.n;
    double s = 1.0;
    double gw = 0.0;  // Greenwood sum d / (n (n - d))
    for (const auto& [t, dc] : by_time) {
        const auto [d, cens] = dc;
        if (d > 0) {
            s *= static_cast<double>(at_risk - d) / static_cast<double>(at_risk);
            if (at_risk > d) gw += static_cast<double>(d) / (static_cast<double>(at_risk) * static_cast<double>(at_risk - d));
            c.steps.push_back({t, s, at_risk, d, cens, s > 0 ? s * s * gw : 0.0});
            if (!c.median && s <= 0.5) c.median = t;
        }
        for (std::size_t k = 0; k < cens; ++k) c.censor_times.push_back(t);
        at_risk -= d + cens;
    }
    return c;
}

inline KmCurve kaplan_meier(const SurvivalDataset& data) {
    data.validate();
    return kaplan_meier(data.time, data.event);
}

// Per-group curves keyed by group label.
inline std::map<std::string, KmCurve> kaplan_meier_by_group(const SurvivalDataset& data) {
    data.validate();
    require(!data.group.empty(), ErrorCode::InvalidArgument, "dataset has no group labels");
    std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> split;
    for (std::size_t i = 0; i < data.size(); ++i) {
        split[data.group[i]].first.push_back(data.time[i]);
        split[data.group[i]].second.push_back(data.event[i]);
    }
    std::map<std::string, KmCurve> out;
    for (const auto& [g, te] : split) out.emplace(g, kaplan_meier(te.first, te.second));
    return out;
}

inline std::string km_csv(const KmCurve& c, const std::string& group = "", const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "group,time,survival,variance,n_at_risk,n_events\n";
    out += join_csv({group, "0", "1", "0", std::to_string(c.n), "0"}) + "\n";
    for (const auto& s : c.steps)
        out += join_csv({group, format_double(s.time), format_double(s.survival), format_double(s.variance),
                         std::to_string(s.n_at_risk), std::to_string(s.n_events)}) +
               "\n";
    return out;
}

struct LogRankResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    std::size_t df = 0;
    std::vector<std::string> groups;
    std::vector<double> observed;
    std::vector<double> expected;
};

// k-group log-rank test. `levels` fixes the group set and order; an empty
// `levels` uses the sorted distinct labels. A level without subjects is an error.
inline LogRankResult log_rank_test(const SurvivalDataset& data, std::vector<std::string> levels = {}) {
    data.validate();
    require(!data.group.empty(), ErrorCode::InvalidArgument, "log-rank test needs group labels");
    if (levels.empty()) {
        levels = data.group;
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    }
    const std::size_t k = levels.size();
    require(k >= 2, ErrorCode::InvalidArgument,
            "log-rank test needs at least two groups, got " + std::to_string(k));
    std::map<std::string, std::size_t> gi;
    for (std::size_t g = 0; g < k; ++g) gi[levels[g]] = g;
    std::vector<std::size_t> grp(data.size());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto it = gi.find(data.group[i]);
        require(it != gi.end(), ErrorCode::InvalidArgument, "group '" + data.group[i] + "' not among the levels");
        grp[i] = it->second;
        ++counts[it->second];
    }
    for (std::size_t g = 0; g < k; ++g)
        require(counts[g] > 0, ErrorCode::EmptyInput, "group '" + levels[g] + "' has no subjects");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return data.time[a] < data.time[b]; });

    std::vector<double> at_risk(counts.begin(), counts.end());
    double n_total = static_cast<double>(data.size());
    Eigen::VectorXd o_minus_e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    LogRankResult r;
    r.groups = levels;
    r.observed.assign(k, 0.0);
    r.expected.assign(k, 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = data.time[order[i]];
        std::vector<double> d(k, 0.0), leaving(k, 0.0);
        double d_total = 0.0;
        for (; i < order.size() && data.time[order[i]] == t; ++i) {
            const std::size_t g = grp[order[i]];
            leaving[g] += 1.0;
            if (data.event[order[i]]) {
                d[g] += 1.0;
                d_total += 1.0;
            }
        }
        if (d_total > 0) {
            for (std::size_t g = 0; g < k; ++g) {
                const double e = at_risk[g] * d_total / n_total;
                r.observed[g] += d[g];
                r.expected[g] += e;
                o_minus_e[static_cast<Eigen::Index>(g)] += d[g] - e;
            }
            if (n_total > 1) {
                const double f = d_total * (n_total - d_total) / (n_total - 1.0);
                for (std::size_t g = 0; g < k; ++g)
                    for (std::size_t h = 0; h < k; ++h) {
                        const double pg = at_risk[g] / n_total, ph = at_risk[h] / n_total;
                        v(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h)) += f * pg * ((g == h ? 1.0 : 0.0) - ph);
                    }
            }
        }
        for (std::size_t g = 0; g < k; ++g) at_risk[g] -= leaving[g];
        n_total -= std::accumulate(leaving.begin(), leaving.end(), 0.0);
    }
    // Drop the last group; the covariance of the remaining k-1 is non-singular
    // unless a group contributes no information, where the pseudo-inverse is used.
    const auto m = static_cast<Eigen::Index>(k - 1);
    const Eigen::VectorXd u = o_minus_e.head(m);
    const Eigen::MatrixXd vv = v.topLeftCorner(m, m);
    const Eigen::VectorXd sol = vv.completeOrthogonalDecomposition().solve(u);
    r.chi_square = std::max(0.0, u.dot(sol));
    r.df = k - 1;
    r.p_value = numeric::chi_square_sf(r.chi_square, static_cast<double>(r.df));
    return r;
}

}  // namespace crlm
