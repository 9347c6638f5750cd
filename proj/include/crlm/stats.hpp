#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/core/numeric.hpp"

namespace crlm {

enum class MannWhitneyMethod { exact, normal_approximation };

inline std::string to_string(MannWhitneyMethod m) {
    return m == MannWhitneyMethod::exact ? "exact" : "normal-approximation";
}

struct MannWhitneyResult {
    double u_statistic = 0.0;  // pairs with a > b, ties 0.5
    double p_value = 1.0;      // two-sided
    MannWhitneyMethod method = MannWhitneyMethod::exact;
    std::size_t n1 = 0, n2 = 0;
};

namespace detail {

// Number of arrangements giving each U for tie-free samples:
// f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u).
inline std::vector<double> mann_whitney_null_counts(std::size_t n1, std::size_t n2) {
    const std::size_t umax = n1 * n2;
    // table[j][u] for the current i, over j = 0..n2
    std::vector<std::vector<double>> prev(n2 + 1, std::vector<double>(umax + 1, 0.0));
    for (std::size_t j = 0; j <= n2; ++j) prev[j][0] = 1.0;
    for (std::size_t i = 1; i <= n1; ++i) {
        std::vector<std::vector<double>> cur(n2 + 1, std::vector<double>(umax + 1, 0.0));
        cur[0][0] = 1.0;
        for (std::size_t j = 1; j <= n2; ++j)
            for (std::size_t u = 0; u <= i * j; ++u) {
                // largest observation is from sample a (beats all j of b) or from b
                cur[j][u] = (u >= j ? prev[j][u - j] : 0.0) + cur[j - 1][u];
            }
        prev = std::move(cur);
    }
    return prev[n2];
}

}  // namespace detail

// Exact null distribution when n1*n2 <= 400 and there are no ties; otherwise
// the normal approximation with tie and continuity corrections.
inline MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), ErrorCode::EmptyInput, "Mann-Whitney U needs two non-empty samples");
    MannWhitneyResult r;
    r.n1 = a.size();
    r.n2 = b.size();
    bool ties = false;
    for (double x : a)
        for (double y : b) {
            if (x > y) r.u_statistic += 1.0;
            else if (x == y) {
                r.u_statistic += 0.5;
                ties = true;
            }
        }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    ties = ties || std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
    const double n1 = static_cast<double>(r.n1), n2 = static_cast<double>(r.n2);
    const double mu = n1 * n2 / 2.0;
    if (!ties && r.n1 * r.n2 <= 400) {
        r.method = MannWhitneyMethod::exact;
        const auto counts = detail::mann_whitney_null_counts(r.n1, r.n2);
        double total = 0.0;
        for (double c : counts) total += c;
        // two-sided: probability of U at least as far from the mean
        const double dev = std::fabs(r.u_statistic - mu);
        double tail = 0.0;
        for (std::size_t u = 0; u < counts.size(); ++u)
            if (std::fabs(static_cast<double>(u) - mu) >= dev - 1e-9) tail += counts[u];
        r.p_value = std::min(1.0, tail / total);
        return r;
    }
    r.method = MannWhitneyMethod::normal_approximation;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double n = n1 + n2;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::fabs(r.u_statistic - mu) - 0.5) / std::sqrt(var);
    r.p_value = numeric::two_sided_normal_p(z);
    return r;
}

struct OddsRatioResult {
    double odds_ratio = 1.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double p_value = 1.0;  // Wald test on log OR
    bool correction_applied = false;
};

// Table layout: a = exposed cases, b = exposed non-cases, c = unexposed cases,
// d = unexposed non-cases. Zero cells get +0.5 on all four (Haldane-Anscombe).
inline OddsRatioResult odds_ratio_2x2(double a, double b, double c, double d) {
    require(a >= 0 && b >= 0 && c >= 0 && d >= 0, ErrorCode::InvalidArgument, "2x2 counts must be nonnegative");
    require(a + b + c + d > 0, ErrorCode::InvalidArgument, "2x2 table is all zero");
    OddsRatioResult r;
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        r.correction_applied = true;
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
    }
    r.odds_ratio = (a * d) / (b * c);
    const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    const double l = std::log(r.odds_ratio);
    r.ci_lower = std::exp(l - 1.96 * se);
    r.ci_upper = std::exp(l + 1.96 * se);
    r.p_value = numeric::two_sided_normal_p(l / se);
    return r;
}

inline nlohmann::json to_json(const MannWhitneyResult& r) {
    return {{"u_statistic", r.u_statistic}, {"p_value", r.p_value}, {"method", to_string(r.method)}, {"n1", r.n1}, {"n2", r.n2}};
}

inline nlohmann::json to_json(const OddsRatioResult& r) {
    return {{"odds_ratio", r.odds_ratio},
            {"ci_lower", r.ci_lower},
            {"ci_upper", r.ci_upper},
            {"p_value", r.p_value},
            {"correction_applied", r.correction_applied}};
}

}  // namespace crlm
