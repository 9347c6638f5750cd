// Independent reference for L1-penalized logistic regression: objective,
// smooth gradient and a plain FISTA minimizer.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "crlm/core/matrix.hpp"
#include "crlm/core/numeric.hpp"
#include "crlm/core/rng.hpp"

namespace oracle {

using namespace crlm;

struct Problem {
    Matrix x;
    std::vector<int> y;
};

inline Problem make_problem(std::size_t n, std::size_t p, std::uint64_t seed, double corr = 0.0) {
    Rng rng(seed);
    Problem d{Matrix(n, p), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double shared = rng.normal();
        double eta = -0.3;
        for (std::size_t j = 0; j < p; ++j) {
            d.x(i, j) = corr * shared + std::sqrt(1 - corr * corr) * rng.normal() + 0.5 * static_cast<double>(j);
            eta += (j % 3 == 0 ? 0.8 : 0.0) * (d.x(i, j) - 0.5 * static_cast<double>(j));
        }
        d.y[i] = rng.bernoulli(numeric::logistic(eta)) ? 1 : 0;
    }
    return d;
}

// (1/n) sum logistic loss + lambda * |beta|_1, computed independently.
inline double objective(const Problem& d, const std::vector<double>& beta, double b0, double lambda) {
    double loss = 0;
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
        double eta = b0;
        for (std::size_t j = 0; j < d.x.cols(); ++j) eta += d.x(i, j) * beta[j];
        loss += (eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta))) - d.y[i] * eta;
    }
    double l1 = 0;
    for (double b : beta) l1 += std::fabs(b);
    return loss / static_cast<double>(d.x.rows()) + lambda * l1;
}

// Gradient of the smooth part; index p is the intercept.
inline std::vector<double> gradient(const Problem& d, const std::vector<double>& beta, double b0) {
    const std::size_t n = d.x.rows(), p = d.x.cols();
    std::vector<double> g(p + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = b0;
        for (std::size_t j = 0; j < p; ++j) eta += d.x(i, j) * beta[j];
        const double r = 1.0 / (1.0 + std::exp(-eta)) - d.y[i];
        for (std::size_t j = 0; j < p; ++j) g[j] += r * d.x(i, j);
        g[p] += r;
    }
    for (auto& v : g) v /= static_cast<double>(n);
    return g;
}

// Accelerated proximal gradient (FISTA) with a fixed 1/L step.
inline std::pair<std::vector<double>, double> fista(const Problem& d, double lambda, int iters) {
    const std::size_t n = d.x.rows(), p = d.x.cols();
    double lip = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1;
        for (std::size_t j = 0; j < p; ++j) s += d.x(i, j) * d.x(i, j);
        lip += s;
    }
    lip /= 4.0 * static_cast<double>(n);
    const double step = 1.0 / lip;
    std::vector<double> b(p + 1, 0.0), prev = b, z = b;
    double t = 1;
    for (int k = 0; k < iters; ++k) {
        const auto g = gradient(d, std::vector<double>(z.begin(), z.begin() + static_cast<long>(p)), z[p]);
        prev = b;
        for (std::size_t j = 0; j <= p; ++j) {
            const double u = z[j] - step * g[j];
            if (j == p) b[j] = u;
            else b[j] = u > step * lambda ? u - step * lambda : (u < -step * lambda ? u + step * lambda : 0.0);
        }
        const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
        for (std::size_t j = 0; j <= p; ++j) z[j] = b[j] + (t - 1) / tn * (b[j] - prev[j]);
        t = tn;
    }
    return {std::vector<double>(b.begin(), b.begin() + static_cast<long>(p)), b[p]};
}

}  // namespace oracle
