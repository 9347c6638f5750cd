#pragma once

// Cox proportional hazards with Breslow ties, fitted by Newton-Raphson.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "crlm/core/numeric.hpp"
#include "crlm/core/text.hpp"
#include "crlm/survival/concordance.hpp"
#include "crlm/survival/dataset.hpp"

namespace crlm {

struct CoxOptions {
    std::size_t max_iter = 100;
    double tol = 1e-9;         // on the log-likelihood change
    double max_abs_beta = 50;  // beyond this the likelihood is taken to be monotone
    double warn_abs_value = 1e3;
};

struct CoxCoefficient {
    std::string name;
    double beta = 0.0;
    double se = 0.0;
    double hazard_ratio = 1.0;
    double ci_lower = 1.0;
    double ci_upper = 1.0;
    double z = 0.0;
    double p_value = 1.0;
};

struct CoxModel {
    std::vector<CoxCoefficient> coefficients;
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    double c_index = 0.5;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t n = 0;
    std::size_t n_events = 0;
    std::vector<std::string> warnings;

    std::vector<double> beta() const {
        std::vector<double> b;
        for (const auto& c : coefficients) b.push_back(c.beta);
        return b;
    }

    std::vector<double> linear_predictor(const Matrix& x) const {
        require(x.cols() == coefficients.size(), ErrorCode::DimensionMismatch, "cox: covariate count mismatch");
        std::vector<double> lp(x.rows(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) lp[i] += coefficients[j].beta * x(i, j);
        return lp;
    }
};

namespace detail {

struct CoxData {
    std::vector<std::size_t> order;  // ascending time
    const SurvivalDataset* d = nullptr;
};

inline CoxData cox_prepare(const SurvivalDataset& data) {
    CoxData c;
    c.d = &data;
    c.order.resize(data.size());
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    std::stable_sort(c.order.begin(), c.order.end(), [&](auto a, auto b) { return data.time[a] < data.time[b]; });
    return c;
}

// Breslow log partial likelihood with gradient and information matrix.
// Risk-set sums accumulate from the latest time backwards; every subject
// sharing an event time sees the same risk set.
inline double cox_evaluate(const CoxData& c, const Eigen::VectorXd& beta, Eigen::VectorXd* grad, Eigen::MatrixXd* info) {
    const auto& d = *c.d;
    const auto p = beta.size();
    const std::size_t n = d.size();
    std::vector<double> eta(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) eta[i] += beta[j] * d.covariates(i, static_cast<std::size_t>(j));
    double ll = 0.0;
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    if (grad) *grad = Eigen::VectorXd::Zero(p);
    if (info) *info = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xi(p);
    std::size_t hi = n;
    while (hi > 0) {
        std::size_t lo = hi - 1;
        const double t = d.time[c.order[lo]];
        while (lo > 0 && d.time[c.order[lo - 1]] == t) --lo;
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t i = c.order[k];
            const double w = std::exp(eta[i]);
            s0 += w;
            if (grad || info) {
                for (Eigen::Index j = 0; j < p; ++j) xi[j] = d.covariates(i, static_cast<std::size_t>(j));
                s1 += w * xi;
                if (info) s2 += w * xi * xi.transpose();
            }
        }
        const double log_s0 = std::log(s0);
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t i = c.order[k];
            if (!d.event[i]) continue;
            ll += eta[i] - log_s0;
            if (grad) {
                for (Eigen::Index j = 0; j < p; ++j) (*grad)[j] += d.covariates(i, static_cast<std::size_t>(j));
                *grad -= s1 / s0;
            }
            if (info) *info += s2 / s0 - (s1 / s0) * (s1 / s0).transpose();
        }
        hi = lo;
    }
    return ll;
}

}  // namespace detail

inline void check_cox_input(const SurvivalDataset& data) {
    data.validate();
    require(!data.covariates.empty(), ErrorCode::InvalidArgument, "cox model needs at least one covariate");
    std::size_t events = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        require(!(data.time[i] == 0.0 && data.event[i] == 1), ErrorCode::InvalidArgument,
                "subject " + std::to_string(i) + " has an event at time 0");
        events += static_cast<std::size_t>(data.event[i]);
    }
    require(events > 0, ErrorCode::EmptyInput, "cox model needs at least one event");
}

inline double cox_partial_log_likelihood(const SurvivalDataset& data, std::span<const double> beta) {
    check_cox_input(data);
    require(beta.size() == data.covariates.cols(), ErrorCode::DimensionMismatch, "beta length differs from covariates");
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    return detail::cox_evaluate(detail::cox_prepare(data), b, nullptr, nullptr);
}

inline CoxModel fit_cox(const SurvivalDataset& data, const CoxOptions& opt = {}) {
    check_cox_input(data);
    const std::size_t p = data.covariates.cols();
    CoxModel m;
    m.n = data.size();
    m.n_events = static_cast<std::size_t>(std::count(data.event.begin(), data.event.end(), 1));
    for (std::size_t j = 0; j < p; ++j) {
        double mx = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) mx = std::max(mx, std::fabs(data.covariates(i, j)));
        if (mx > opt.warn_abs_value) {
            const std::string name = j < data.covariate_names.size() ? data.covariate_names[j] : std::to_string(j);
            m.warnings.push_back("covariate '" + name + "' has |value| up to " + format_double(mx) +
                                 "; consider standardizing");
        }
    }
    const auto cd = detail::cox_prepare(data);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd grad;
    Eigen::MatrixXd info;
    double ll = detail::cox_evaluate(cd, beta, &grad, &info);
    m.null_log_likelihood = ll;
    int flat_steps = 0;
    for (m.iterations = 0; m.iterations < opt.max_iter;) {
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorCode::NonConvergence,
                "cox information matrix is not positive definite");
        Eigen::VectorXd step = ldlt.solve(grad);
        const double newton_size = step.cwiseAbs().maxCoeff();
        ++m.iterations;
        Eigen::VectorXd cand = beta + step;
        double ll_new = detail::cox_evaluate(cd, cand, nullptr, nullptr);
        for (int h = 0; h < 30 && !(ll_new >= ll); ++h) {
            step *= 0.5;
            cand = beta + step;
            ll_new = detail::cox_evaluate(cd, cand, nullptr, nullptr);
        }
        require(cand.cwiseAbs().maxCoeff() <= opt.max_abs_beta, ErrorCode::NonConvergence,
                "cox coefficients diverge (|beta| > " + format_double(opt.max_abs_beta) +
                    "); the partial likelihood looks monotone (perfect separation)");
        const bool flat = !(ll_new - ll >= opt.tol);
        if (ll_new >= ll) {
            beta = cand;
            ll = detail::cox_evaluate(cd, beta, &grad, &info);
        }
        if (!flat) {
            flat_steps = 0;
            continue;
        }
        // Near a real maximum Newton steps collapse once the likelihood is flat.
        // Steps that stay large mean beta is running off (monotone likelihood).
        if (newton_size <= 1e-6 * (1.0 + beta.cwiseAbs().maxCoeff())) {
            m.converged = true;
            break;
        }
        if (++flat_steps >= 5)
            throw Error(ErrorCode::NonConvergence,
                        "cox coefficients diverge (|beta| = " + format_double(beta.cwiseAbs().maxCoeff()) +
                            " and still growing); the partial likelihood looks monotone (perfect separation)");
    }
    if (!m.converged) m.warnings.push_back("Newton-Raphson stopped after " + std::to_string(opt.max_iter) + " iterations");
    m.log_likelihood = ll;

    const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
    const double z975 = 1.959963984540054;
    for (std::size_t j = 0; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        CoxCoefficient c;
        c.name = j < data.covariate_names.size() ? data.covariate_names[j] : "x" + std::to_string(j);
        c.beta = beta[jj];
        c.se = std::sqrt(std::max(0.0, cov(jj, jj)));
        c.hazard_ratio = std::exp(c.beta);
        c.ci_lower = std::exp(c.beta - z975 * c.se);
        c.ci_upper = std::exp(c.beta + z975 * c.se);
        c.z = c.se > 0 ? c.beta / c.se : 0.0;
        c.p_value = numeric::two_sided_normal_p(c.z);
        m.coefficients.push_back(c);
    }
    const auto lp = m.linear_predictor(data.covariates);
    m.c_index = concordance_index(lp, data.time, data.event).c_index;
    return m;
}

inline nlohmann::json cox_to_json(const CoxModel& m) {
    nlohmann::json j;
    j["n"] = m.n;
    j["n_events"] = m.n_events;
    j["log_likelihood"] = m.log_likelihood;
    j["null_log_likelihood"] = m.null_log_likelihood;
    j["c_index"] = m.c_index;
    j["iterations"] = m.iterations;
    j["converged"] = m.converged;
    j["warnings"] = m.warnings;
    j["coefficients"] = nlohmann::json::array();
    for (const auto& c : m.coefficients)
        j["coefficients"].push_back({{"name", c.name},
                                     {"coefficient", c.beta},
                                     {"se", c.se},
                                     {"hazard_ratio", c.hazard_ratio},
                                     {"ci_lower", c.ci_lower},
                                     {"ci_upper", c.ci_upper},
                                     {"z", c.z},
                                     {"p_value", c.p_value}});
    return j;
}

inline std::string cox_to_text(const CoxModel& m) {
    std::size_t w = 9;
    for (const auto& c : m.coefficients) w = std::max(w, c.name.size());
    auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.insert(0, width - s.size(), ' ');
        return s;
    };
    auto left = [](std::string s, std::size_t width) {
        if (s.size() < width) s.append(width - s.size(), ' ');
        return s;
    };
    std::string out = left("covariate", w) + pad("coef", 10) + pad("HR", 10) + pad("95% CI", 22) + pad("p", 10) + "\n";
    for (const auto& c : m.coefficients) {
        const std::string ci = format_fixed(c.ci_lower, 3) + "-" + format_fixed(c.ci_upper, 3);
        const std::string p = c.p_value < 1e-4 ? "<0.0001" : format_fixed(c.p_value, 4);
        out += left(c.name, w) + pad(format_fixed(c.beta, 4), 10) + pad(format_fixed(c.hazard_ratio, 3), 10) +
               pad(ci, 22) + pad(p, 10) + "\n";
    }
    out += "n=" + std::to_string(m.n) + " events=" + std::to_string(m.n_events) +
           " loglik=" + format_fixed(m.log_likelihood, 4) + " C=" + format_fixed(m.c_index, 3) +
           (m.converged ? "" : " (not converged)") + "\n";
    return out;
}

}  // namespace crlm
