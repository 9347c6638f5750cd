#pragma once

// L1-penalized logistic regression:
//   minimize (1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] + lambda * |beta|_1,
//   eta_i = b0 + x_i . beta, intercept unpenalized, no internal standardization.
// Solved with IRLS outer iterations and cyclic coordinate descent on the
// weighted least-squares subproblem, with step-halving on the true objective.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crlm/core/matrix.hpp"
#include "crlm/core/numeric.hpp"
#include "crlm/eval/roc.hpp"
#include "crlm/preprocess.hpp"

namespace crlm {

struct ConvergenceReport {
    std::size_t iterations = 0;  // coordinate sweeps
    double max_delta = 0.0;      // last outer-iteration max |coefficient change|
    bool converged = false;
};

struct LassoLogisticModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
    ConvergenceReport convergence;
    std::vector<double> feature_sd;  // population SD of training columns, for importance
    std::vector<double> lambda_grid;  // filled by cross-validated selection
    std::vector<double> cv_auc;

    double linear(std::span<const double> x) const {
        double eta = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) eta += coefficients[j] * x[j];
        return eta;
    }
    double predict_proba(std::span<const double> x) const { return numeric::logistic(linear(x)); }
    std::size_t nonzero() const {
        return static_cast<std::size_t>(std::count_if(coefficients.begin(), coefficients.end(),
                                                      [](double b) { return b != 0.0; }));
    }
};

struct LassoParams {
    std::optional<double> lambda;  // unset: select by cross-validated AUC
    double tol = 1e-6;
    std::size_t max_iter = 10000;
    std::size_t n_lambdas = 30;
    double decades = 4.0;
    std::size_t cv_folds = 5;
};

namespace detail {

inline void check_lasso_inputs(const Matrix& x, std::span<const int> y) {
    require(x.rows() == y.size(), ErrorCode::DimensionMismatch, "lasso: X rows != labels");
    require(x.rows() > 0 && x.cols() > 0, ErrorCode::EmptyInput, "lasso: empty design matrix");
    std::size_t pos = 0;
    for (int v : y) {
        require(v == 0 || v == 1, ErrorCode::InvalidArgument, "lasso: labels must be 0/1");
        pos += static_cast<std::size_t>(v);
    }
    require(pos > 0 && pos < y.size(), ErrorCode::SingleClass, "lasso: labels contain a single class");
    for (double v : x.data()) require(std::isfinite(v), ErrorCode::InvalidArgument, "lasso: non-finite feature value");
}

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

// Column-major copy so coordinate updates read contiguous memory.
struct ColumnMajor {
    std::size_t n = 0, p = 0;
    std::vector<double> v;
    explicit ColumnMajor(const Matrix& x) : n(x.rows()), p(x.cols()), v(x.rows() * x.cols()) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) v[j * n + i] = x(i, j);
    }
    const double* col(std::size_t j) const { return v.data() + j * n; }
};

class LassoSolver {
public:
    LassoSolver(const Matrix& x, std::span<const int> y) : xc_(x), y_(y.begin(), y.end()) {}

    double lambda_max() const {
        const double ybar = mean_y();
        double m = 0.0;
        for (std::size_t j = 0; j < xc_.p; ++j) {
            const double* c = xc_.col(j);
            double g = 0.0;
            for (std::size_t i = 0; i < xc_.n; ++i) g += c[i] * (y_[i] - ybar);
            m = std::max(m, std::fabs(g) / static_cast<double>(xc_.n));
        }
        return m;
    }

    double mean_y() const {
        double s = 0;
        for (int v : y_) s += v;
        return s / static_cast<double>(y_.size());
    }

    double objective(const std::vector<double>& beta, double b0, double lambda) const {
        const auto eta = linear(beta, b0);
        double loss = 0.0;
        for (std::size_t i = 0; i < xc_.n; ++i) loss += numeric::softplus(eta[i]) - y_[i] * eta[i];
        double l1 = 0.0;
        for (double b : beta) l1 += std::fabs(b);
        return loss / static_cast<double>(xc_.n) + lambda * l1;
    }

    // Minimizes from the given start (warm start); updates beta/b0 in place.
    ConvergenceReport solve(std::vector<double>& beta, double& b0, double lambda, double tol,
                            std::size_t max_iter) const {
        const std::size_t n = xc_.n, p = xc_.p;
        const double inv_n = 1.0 / static_cast<double>(n);
        ConvergenceReport rep;
        std::vector<double> w(n), r(n), xw2(p), wmean(p);
        double obj = objective(beta, b0, lambda);
        while (rep.iterations < max_iter) {
            auto eta = linear(beta, b0);
            for (std::size_t i = 0; i < n; ++i) {
                const double pr = numeric::logistic(eta[i]);
                w[i] = std::max(pr * (1.0 - pr), 1e-10);
                r[i] = (y_[i] - pr) / w[i];
            }
            double wsum = 0.0;
            for (double wi : w) wsum += wi;
            // Columns are centered with the IRLS weights inside the subproblem,
            // which decouples them from the intercept.
            for (std::size_t j = 0; j < p; ++j) {
                const double* c = xc_.col(j);
                double m = 0.0;
                for (std::size_t i = 0; i < n; ++i) m += w[i] * c[i];
                m /= wsum;
                double s2 = 0.0;
                for (std::size_t i = 0; i < n; ++i) s2 += w[i] * (c[i] - m) * (c[i] - m);
                wmean[j] = m;
                xw2[j] = s2 * inv_n;
            }
            std::vector<double> nb = beta;
            double nb0 = b0;
            {
                double g = 0.0;
                for (std::size_t i = 0; i < n; ++i) g += w[i] * r[i];
                const double d = g / wsum;
                nb0 += d;
                for (std::size_t i = 0; i < n; ++i) r[i] -= d;
            }
            // Inner solve: coordinate sweeps, accelerated by Newton steps on the
            // current active set with signs held fixed. Termination is always a
            // full coordinate sweep that changes nothing beyond inner_tol.
            const double inner_tol = tol * 0.1;
            auto sweep = [&](bool full) {
                ++rep.iterations;
                double maxd = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    if (!full && nb[j] == 0.0) continue;
                    if (xw2[j] <= 0.0) continue;
                    const double* c = xc_.col(j);
                    const double m = wmean[j];
                    double g = 0.0;
                    for (std::size_t i = 0; i < n; ++i) g += w[i] * c[i] * r[i];
                    g = g * inv_n + xw2[j] * nb[j];
                    const double upd = soft_threshold(g, lambda) / xw2[j];
                    const double d = upd - nb[j];
                    if (d == 0.0) continue;
                    nb[j] = upd;
                    nb0 -= d * m;
                    for (std::size_t i = 0; i < n; ++i) r[i] -= d * (c[i] - m);
                    maxd = std::max(maxd, std::fabs(d) * std::max(1.0, std::fabs(m)));
                }
                return maxd;
            };
            while (rep.iterations < max_iter) {
                if (sweep(true) < inner_tol) break;
                for (int k = 0; k < 2 && rep.iterations < max_iter; ++k)
                    if (sweep(false) < inner_tol) break;
                newton_step(nb, nb0, r, w, wmean, lambda);
                ++rep.iterations;
            }
            // Step-halving on the penalized objective.
            double step = 1.0;
            std::vector<double> cand = nb;
            double cand0 = nb0;
            double cobj = objective(cand, cand0, lambda);
            for (int h = 0; h < 30 && cobj > obj + 1e-15 * std::max(1.0, std::fabs(obj)); ++h) {
                step *= 0.5;
                for (std::size_t j = 0; j < p; ++j) cand[j] = beta[j] + step * (nb[j] - beta[j]);
                cand0 = b0 + step * (nb0 - b0);
                cobj = objective(cand, cand0, lambda);
            }
            double maxd = std::fabs(cand0 - b0);
            for (std::size_t j = 0; j < p; ++j) maxd = std::max(maxd, std::fabs(cand[j] - beta[j]));
            const bool improved = cobj <= obj + 1e-15 * std::max(1.0, std::fabs(obj));
            if (improved) {
                beta = std::move(cand);
                b0 = cand0;
                obj = cobj;
            }
            rep.max_delta = improved ? maxd : 0.0;
            if (!improved || maxd < tol) {
                rep.converged = true;
                break;
            }
        }
        return rep;
    }

    std::size_t n() const { return xc_.n; }
    std::size_t p() const { return xc_.p; }

private:
    // One Newton step for the weighted least-squares subproblem restricted to
    // the nonzero coordinates with their signs held fixed. Coordinates whose
    // sign would flip are zeroed and the system re-solved without them; the
    // result is kept only if the subproblem objective drops, otherwise the
    // plain step is cut at the first zero crossing.
    void newton_step(std::vector<double>& beta, double& b0, std::vector<double>& r, const std::vector<double>& w,
                     const std::vector<double>& wmean, double lambda) const {
        const std::size_t n = xc_.n;
        const double inv_n = 1.0 / static_cast<double>(n);
        std::vector<std::size_t> act;
        for (std::size_t j = 0; j < beta.size(); ++j)
            if (beta[j] != 0.0) act.push_back(j);
        if (act.empty()) return;
        const auto k = static_cast<Eigen::Index>(act.size());
        const auto ni = static_cast<Eigen::Index>(n);
        Eigen::MatrixXd xa(ni, k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const double* c = xc_.col(act[static_cast<std::size_t>(a)]);
            const double m = wmean[act[static_cast<std::size_t>(a)]];
            for (std::size_t i = 0; i < n; ++i) xa(static_cast<Eigen::Index>(i), a) = c[i] - m;
        }
        const Eigen::Map<const Eigen::VectorXd> wv(w.data(), ni);
        Eigen::Map<Eigen::VectorXd> rv(r.data(), ni);
        const Eigen::MatrixXd wx = wv.asDiagonal() * xa;
        const Eigen::MatrixXd h = (xa.transpose() * wx) * inv_n;
        Eigen::VectorXd g = (wx.transpose() * rv) * inv_n;
        Eigen::VectorXd sign(k), b(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            b(a) = beta[act[static_cast<std::size_t>(a)]];
            sign(a) = b(a) > 0 ? 1.0 : -1.0;
        }
        g -= lambda * sign;
        auto subproblem = [&](const Eigen::VectorXd& bb, const Eigen::VectorXd& rr) {
            return 0.5 * inv_n * rr.dot(wv.asDiagonal() * rr) + lambda * bb.lpNorm<1>();
        };
        const double q0 = subproblem(b, rv);

        // Sign-consistent solve on a shrinking set.
        std::vector<char> in(static_cast<std::size_t>(k), 1);
        Eigen::VectorXd target = b;
        for (Eigen::Index pass = 0; pass < k; ++pass) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index a = 0; a < k; ++a)
                if (in[static_cast<std::size_t>(a)]) idx.push_back(a);
            if (idx.empty()) break;
            const auto m = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd hs(m, m);
            Eigen::VectorXd rhs(m);
            for (Eigen::Index u = 0; u < m; ++u) {
                // Gradient at the point where dropped coordinates are already zero.
                double gi = g(idx[static_cast<std::size_t>(u)]);
                for (Eigen::Index a = 0; a < k; ++a)
                    if (!in[static_cast<std::size_t>(a)]) gi += h(idx[static_cast<std::size_t>(u)], a) * b(a);
                rhs(u) = gi;
                for (Eigen::Index v = 0; v < m; ++v)
                    hs(u, v) = h(idx[static_cast<std::size_t>(u)], idx[static_cast<std::size_t>(v)]);
            }
            // Minimum-norm solution: complementary one-hot columns make hs singular.
            const Eigen::VectorXd d = hs.completeOrthogonalDecomposition().solve(rhs);
            if (!d.allFinite()) return;
            bool flipped = false;
            target = b;
            for (Eigen::Index a = 0; a < k; ++a)
                if (!in[static_cast<std::size_t>(a)]) target(a) = 0.0;
            for (Eigen::Index u = 0; u < m; ++u) {
                const Eigen::Index a = idx[static_cast<std::size_t>(u)];
                target(a) = b(a) + d(u);
                if (target(a) * sign(a) <= 0) {
                    in[static_cast<std::size_t>(a)] = 0;
                    flipped = true;
                }
            }
            if (!flipped) break;
        }
        for (Eigen::Index a = 0; a < k; ++a)
            if (!in[static_cast<std::size_t>(a)]) target(a) = 0.0;
        Eigen::VectorXd step = target - b;
        Eigen::VectorXd r_new = rv - xa * step;
        if (subproblem(target, r_new) > q0) return;  // leave it to coordinate descent
        rv = r_new;
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t j = act[static_cast<std::size_t>(a)];
            beta[j] = target(a);
            b0 -= step(a) * wmean[j];
        }
    }

    std::vector<double> linear(const std::vector<double>& beta, double b0) const {
        std::vector<double> eta(xc_.n, b0);
        for (std::size_t j = 0; j < xc_.p; ++j) {
            if (beta[j] == 0.0) continue;
            const double* c = xc_.col(j);
            for (std::size_t i = 0; i < xc_.n; ++i) eta[i] += beta[j] * c[i];
        }
        return eta;
    }

    ColumnMajor xc_;
    std::vector<double> y_;
};

inline std::vector<double> column_sds(const Matrix& x) {
    std::vector<double> sd(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) sd[j] = numeric::population_sd(x.column(j));
    return sd;
}

}  // namespace detail

inline double lasso_lambda_max(const Matrix& x, std::span<const int> y) {
    detail::check_lasso_inputs(x, y);
    return detail::LassoSolver(x, y).lambda_max();
}

inline double lasso_objective(const Matrix& x, std::span<const int> y, const LassoLogisticModel& m) {
    return detail::LassoSolver(x, y).objective(m.coefficients, m.intercept, m.lambda);
}

inline LassoLogisticModel fit_lasso_logistic(const Matrix& x, std::span<const int> y, double lambda,
                                             double tol = 1e-6, std::size_t max_iter = 10000) {
    detail::check_lasso_inputs(x, y);
    require(lambda >= 0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
    const detail::LassoSolver solver(x, y);
    LassoLogisticModel m;
    m.lambda = lambda;
    m.coefficients.assign(x.cols(), 0.0);
    m.intercept = numeric::logit(solver.mean_y());
    m.feature_sd = detail::column_sds(x);
    if (lambda >= solver.lambda_max()) {
        m.convergence.converged = true;
        return m;
    }
    m.convergence = solver.solve(m.coefficients, m.intercept, lambda, tol, max_iter);
    return m;
}

// lambda_max down by `decades`, log-spaced, descending.
inline std::vector<double> lasso_lambda_grid(double lambda_max, std::size_t count, double decades) {
    require(count >= 2, ErrorCode::InvalidArgument, "lambda grid needs at least two values");
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k)
        g[k] = lambda_max * std::pow(10.0, -decades * static_cast<double>(k) / static_cast<double>(count - 1));
    return g;
}

// Warm-started fits down a descending grid. Stops early once the fit explains
// 99.9% of the null deviance; later entries are left empty.
inline std::vector<std::optional<LassoLogisticModel>> fit_lasso_path(const Matrix& x, std::span<const int> y,
                                                                    const std::vector<double>& grid, double tol,
                                                                    std::size_t max_iter) {
    detail::check_lasso_inputs(x, y);
    const detail::LassoSolver solver(x, y);
    const double ybar = solver.mean_y();
    const double null_obj = solver.objective(std::vector<double>(x.cols(), 0.0), numeric::logit(ybar), 0.0);
    std::vector<std::optional<LassoLogisticModel>> out(grid.size());
    std::vector<double> beta(x.cols(), 0.0);
    double b0 = numeric::logit(ybar);
    const double lmax = solver.lambda_max();
    const auto sds = detail::column_sds(x);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        LassoLogisticModel m;
        m.lambda = grid[k];
        m.feature_sd = sds;
        if (grid[k] < lmax) {
            m.convergence = solver.solve(beta, b0, grid[k], tol, max_iter);
        } else {
            m.convergence.converged = true;
        }
        m.coefficients = beta;
        m.intercept = b0;
        const double loss = solver.objective(beta, b0, 0.0);
        out[k] = std::move(m);
        if (null_obj > 0 && 1.0 - loss / null_obj >= 0.999) break;
    }
    return out;
}

inline LassoLogisticModel fit_lasso_cv(const Matrix& x, std::span<const int> y, const LassoParams& params,
                                       std::uint64_t seed) {
    detail::check_lasso_inputs(x, y);
    if (params.lambda) return fit_lasso_logistic(x, y, *params.lambda, params.tol, params.max_iter);
    const double lmax = lasso_lambda_max(x, y);
    if (lmax <= 0.0) return fit_lasso_logistic(x, y, 0.0, params.tol, params.max_iter);
    const auto grid = lasso_lambda_grid(lmax, params.n_lambdas, params.decades);

    const auto fold = stratified_folds(y, params.cv_folds, derive_seed(seed, 0x1a55));
    std::vector<double> auc_sum(grid.size(), 0.0);
    std::vector<std::size_t> auc_n(grid.size(), 0);
    for (std::size_t f = 0; f < params.cv_folds; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
        std::vector<int> ytr, yte;
        for (auto i : tr) ytr.push_back(y[i]);
        for (auto i : te) yte.push_back(y[i]);
        const auto npos_tr = std::count(ytr.begin(), ytr.end(), 1);
        const auto npos_te = std::count(yte.begin(), yte.end(), 1);
        if (npos_tr == 0 || npos_tr == static_cast<long>(ytr.size())) continue;
        if (npos_te == 0 || npos_te == static_cast<long>(yte.size())) continue;
        const Matrix xtr = x.select_rows(tr);
        const Matrix xte = x.select_rows(te);
        const auto path = fit_lasso_path(xtr, ytr, grid, params.tol, params.max_iter);
        std::vector<double> scores(te.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!path[k]) break;
            for (std::size_t i = 0; i < te.size(); ++i) scores[i] = path[k]->linear(xte.row(i));
            auc_sum[k] += auc(scores, yte);
            ++auc_n[k];
        }
    }
    // Highest mean AUC; ties keep the larger lambda. Only lambdas evaluated on
    // every usable fold compete.
    std::size_t folds_used = *std::max_element(auc_n.begin(), auc_n.end());
    std::size_t best = 0;
    double best_auc = -1.0;
    std::vector<double> mean_auc(grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (auc_n[k] == 0 || auc_n[k] < folds_used) continue;
        mean_auc[k] = auc_sum[k] / static_cast<double>(auc_n[k]);
        if (mean_auc[k] > best_auc) {
            best_auc = mean_auc[k];
            best = k;
        }
    }
    std::vector<double> sub(grid.begin(), grid.begin() + static_cast<long>(best) + 1);
    auto path = fit_lasso_path(x, y, sub, params.tol, params.max_iter);
    LassoLogisticModel m;
    for (auto it = path.rbegin(); it != path.rend(); ++it)
        if (*it) {
            m = **it;
            break;
        }
    if (!path[best]) {
        // Full data saturated before reaching the chosen lambda; finish the fit there.
        auto beta = m.coefficients;
        double b0 = m.intercept;
        m.convergence = detail::LassoSolver(x, y).solve(beta, b0, grid[best], params.tol, params.max_iter);
        m.coefficients = beta;
        m.intercept = b0;
        m.lambda = grid[best];
    }
    m.lambda_grid = grid;
    m.cv_auc = mean_auc;
    return m;
}

}  // namespace crlm
