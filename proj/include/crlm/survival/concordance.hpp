#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "crlm/core/error.hpp"
#include "crlm/survival/dataset.hpp"

namespace crlm {

struct ConcordanceResult {
    double c_index = 0.5;
    std::uint64_t usable_pairs = 0;
    std::uint64_t concordant = 0;
    std::uint64_t tied_score = 0;
};

// Harrell's C. A pair is usable when the shorter time is an event; pairs with
// equal times are skipped. A higher score should mean an earlier event.
inline ConcordanceResult concordance_index(std::span<const double> scores, std::span<const double> time,
                                           std::span<const int> event) {
    require(!scores.empty(), ErrorCode::EmptyInput, "concordance_index on empty data");
    require(scores.size() == time.size() && time.size() == event.size(), ErrorCode::DimensionMismatch,
            "scores, times and events differ in length");
    ConcordanceResult r;
    const std::size_t n = scores.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!event[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(time[i] < time[j])) continue;
            ++r.usable_pairs;
            if (scores[i] > scores[j])
                ++r.concordant;
            else if (scores[i] == scores[j])
                ++r.tied_score;
        }
    }
    require(r.usable_pairs > 0, ErrorCode::NoUsablePairs, "no usable pairs for the concordance index");
    r.c_index = (2.0 * static_cast<double>(r.concordant) + static_cast<double>(r.tied_score)) /
                (2.0 * static_cast<double>(r.usable_pairs));
    return r;
}

inline ConcordanceResult concordance_index(std::span<const double> scores, const SurvivalDataset& data) {
    data.validate();
    return concordance_index(scores, data.time, data.event);
}

enum class RiskGroup { low, medium, high };

inline std::string to_string(RiskGroup g) {
    switch (g) {
        case RiskGroup::low: return "low";
        case RiskGroup::medium: return "medium";
        case RiskGroup::high: return "high";
    }
    return "low";
}

// A score equal to a cutoff goes to the higher-risk side.
inline std::vector<RiskGroup> risk_group_stratification(std::span<const double> scores, double lower, double upper) {
    require(lower <= upper, ErrorCode::InvalidArgument, "risk cutoffs must be ordered (lower <= upper)");
    std::vector<RiskGroup> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s >= upper ? RiskGroup::high : (s >= lower ? RiskGroup::medium : RiskGroup::low));
    return out;
}

// Cutoffs that split the scores as the metabolic tertiles do: low and medium
// get floor(n/3) each, high the remainder. Ties at a cutoff can move a patient up.
inline std::pair<double, double> tertile_cutoffs(std::span<const double> scores) {
    const std::size_t n = scores.size();
    require(n >= 3, ErrorCode::InvalidArgument, "tertile cutoffs need at least 3 scores");
    std::vector<double> s(scores.begin(), scores.end());
    std::sort(s.begin(), s.end());
    const std::size_t third = n / 3;
    return {s[third], s[2 * third]};
}

}  // namespace crlm
