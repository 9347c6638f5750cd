#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crlm/core/rng.hpp"
#include "crlm/core/text.hpp"
#include "crlm/eval/roc.hpp"

namespace crlm {

using MetricFn = std::function<double(std::span<const double>, std::span<const int>)>;

struct BootstrapCI {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t n_iterations = 0;
    std::size_t n_degenerate = 0;  // resamples lacking a class, skipped
    std::uint64_t seed = 0;
    std::vector<double> samples;   // metric per valid resample, iteration order
    std::size_t lower_rank = 0;    // order-statistic indices into sorted samples
    std::size_t upper_rank = 0;
    bool point_outside = false;    // point not within [lower, upper]
};

// Percentile bootstrap. Iteration i draws its indices from its own stream
// derive_seed(seed, i), so results do not depend on evaluation order.
// Bounds: sorted[floor(0.025 (m-1))] and sorted[ceil(0.975 (m-1))].
inline BootstrapCI bootstrap_ci(const MetricFn& metric, std::span<const double> scores, std::span<const int> labels,
                                std::size_t n_iterations, std::uint64_t seed) {
    require_binary(scores, labels);
    require(n_iterations >= 100, ErrorCode::InvalidArgument, "bootstrap needs at least 100 iterations");
    const std::size_t n = scores.size();
    BootstrapCI ci;
    ci.n_iterations = n_iterations;
    ci.seed = seed;
    ci.point = metric(scores, labels);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t it = 0; it < n_iterations; ++it) {
        Rng rng(derive_seed(seed, it));
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = rng.index(n);
            s[i] = scores[k];
            y[i] = labels[k];
            pos += static_cast<std::size_t>(y[i]);
        }
        if (pos == 0 || pos == n) {
            ++ci.n_degenerate;
            continue;
        }
        ci.samples.push_back(metric(s, y));
    }
    require(2 * ci.n_degenerate <= n_iterations, ErrorCode::DegenerateResamples,
            std::to_string(ci.n_degenerate) + " of " + std::to_string(n_iterations) +
                " bootstrap resamples lacked a class");
    std::vector<double> sorted = ci.samples;
    std::sort(sorted.begin(), sorted.end());
    const double m1 = static_cast<double>(sorted.size() - 1);
    ci.lower_rank = static_cast<std::size_t>(std::floor(0.025 * m1));
    ci.upper_rank = static_cast<std::size_t>(std::ceil(0.975 * m1));
    ci.lower = sorted[ci.lower_rank];
    ci.upper = sorted[ci.upper_rank];
    ci.point_outside = ci.point < ci.lower || ci.point > ci.upper;
    return ci;
}

inline BootstrapCI bootstrap_auc(std::span<const double> scores, std::span<const int> labels,
                                 std::size_t n_iterations, std::uint64_t seed) {
    return bootstrap_ci([](std::span<const double> s, std::span<const int> y) { return auc(s, y); }, scores, labels,
                        n_iterations, seed);
}

inline std::string bootstrap_samples_csv(const BootstrapCI& ci, const std::string& comment = "") {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    out += "sample,value\n";
    for (std::size_t i = 0; i < ci.samples.size(); ++i) out += std::to_string(i) + "," + format_double(ci.samples[i]) + "\n";
    return out;
}

}  // namespace crlm
