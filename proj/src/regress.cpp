// SPDX-License-Identifier: Apache-2.0
#include "pdeid/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace pdeid {

namespace {

constexpr double kCdTol = 1e-7;      // on standardized coefficients
constexpr long kMaxSweeps = 100000;  // per lambda
constexpr double kRssGuard = 1e-300;

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw RegressError("ols: row count mismatch");
    if (X.rows() < X.cols()) throw RegressError("ols: fewer rows than columns");
    if (!X.allFinite() || !y.allFinite()) throw RegressError("ols: non-finite input");

    // The factorization runs on unit-norm columns so that the rank decision
    // is about geometry, not about the wildly different physical units of
    // library columns. Directions with pivots below 1e-6 of the leading one
    // are structural degeneracies (exactly proportional columns up to
    // estimation dust); resolving them minimum-norm keeps the coefficients,
    // and any adaptive weights derived from them, finite.
    const long p = X.cols();
    Eigen::VectorXd norms(p);
    Eigen::MatrixXd Xn(X.rows(), p);
    for (long j = 0; j < p; ++j) {
        norms(j) = X.col(j).norm();
        if (norms(j) > 0.0)
            Xn.col(j) = X.col(j) / norms(j);
        else
            Xn.col(j).setZero();
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xn);
    cod.setThreshold(1e-6);
    OlsResult r;
    Eigen::VectorXd beta_n = cod.solve(y);
    r.beta.resize(p);
    for (long j = 0; j < p; ++j) r.beta(j) = norms(j) > 0.0 ? beta_n(j) / norms(j) : 0.0;
    r.rank = cod.rank();
    r.rank_deficient = r.rank < p;
    r.rss = (y - X * r.beta).squaredNorm();
    return r;
}

Eigen::VectorXd adaptive_weights(const Eigen::VectorXd& beta_ols, double gamma) {
    if (!(gamma > 0.0)) throw RegressError("adaptive_weights: gamma must be positive");
    Eigen::VectorXd w(beta_ols.size());
    for (long j = 0; j < beta_ols.size(); ++j) {
        const double a = std::abs(beta_ols(j));
        w(j) = a == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(a, -gamma);
    }
    return w;
}

namespace {

// Standardized view of the weighted-lasso problem. Solving happens on
// x_tilde = (x - m)/s (centered only when an intercept column is present)
// and y_hat = y_tilde/sigma; the penalty weights apply to the standardized
// coefficients directly, which keeps the fit invariant under column
// rescaling for every gamma. Natural-unit coefficients are recovered as
// beta = sigma * beta_hat / s.
struct StdProblem {
    long n = 0;
    long p = 0;  // all columns, including intercept/excluded
    std::optional<int> intercept;
    std::vector<int> penalized;  // columns active in the CD solve
    Eigen::MatrixXd G;           // Gram of standardized penalized columns
    Eigen::VectorXd c;           // X_tilde^T y_hat
    double yy = 0.0;             // y_hat^T y_hat
    double sigma = 1.0;
    double y_mean = 0.0;
    Eigen::VectorXd col_mean;  // full-size
    Eigen::VectorXd scale;     // full-size
    Eigen::VectorXd w_hat;     // per penalized column
    Eigen::VectorXd w_nat;     // natural weights, full-size
};

StdProblem standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, std::optional<int> intercept) {
    if (X.rows() != y.size()) throw RegressError("lasso: row count mismatch");
    if (w.size() != X.cols()) throw RegressError("lasso: weight count mismatch");
    for (long j = 0; j < w.size(); ++j)
        if (w(j) < 0.0 || std::isnan(w(j))) throw RegressError("lasso: weights must be >= 0");

    StdProblem sp;
    sp.n = X.rows();
    sp.p = X.cols();
    sp.intercept = intercept;
    sp.w_nat = w;
    const bool center = intercept.has_value();

    sp.col_mean = center ? Eigen::VectorXd(X.colwise().mean()) : Eigen::VectorXd::Zero(sp.p);
    sp.y_mean = center ? y.mean() : 0.0;
    sp.scale.resize(sp.p);
    for (long j = 0; j < sp.p; ++j) {
        const double ms = (X.col(j).array() - sp.col_mean(j)).square().mean();
        sp.scale(j) = std::sqrt(ms);
    }

    for (long j = 0; j < sp.p; ++j) {
        if (intercept && j == *intercept) continue;
        if (!(sp.scale(j) > 0.0)) continue;               // degenerate column
        if (std::isinf(w(j))) continue;                   // sentinel: excluded
        sp.penalized.push_back(static_cast<int>(j));
    }

    const Eigen::VectorXd yc = y.array() - sp.y_mean;
    sp.sigma = std::sqrt(yc.squaredNorm() / static_cast<double>(sp.n));
    if (!(sp.sigma > 0.0)) sp.sigma = 1.0;
    const Eigen::VectorXd yh = yc / sp.sigma;
    sp.yy = yh.squaredNorm();

    const long q = static_cast<long>(sp.penalized.size());
    sp.G.resize(q, q);
    sp.c.resize(q);
    sp.w_hat.resize(q);
    // standardized Gram assembled column-by-column to avoid materializing
    // the standardized matrix
    Eigen::MatrixXd Xs(sp.n, q);
    for (long a = 0; a < q; ++a) {
        const int j = sp.penalized[static_cast<std::size_t>(a)];
        Xs.col(a) = (X.col(j).array() - sp.col_mean(j)) / sp.scale(j);
        sp.w_hat(a) = sp.w_nat(j);
    }
    sp.G.noalias() = Xs.transpose() * Xs;
    sp.c.noalias() = Xs.transpose() * yh;
    return sp;
}

double lambda_max_of(const StdProblem& sp) {
    double lmax = 0.0;
    for (long a = 0; a < sp.c.size(); ++a) {
        if (sp.w_hat(a) <= 0.0) continue;  // zero-weight column is always active; no finite lmax
        lmax = std::max(lmax, 2.0 * std::abs(sp.c(a)) / sp.w_hat(a));
    }
    return lmax * sp.sigma;  // natural units
}

}  // namespace

Eigen::VectorXd make_lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, int count, double ratio,
                                 std::optional<int> intercept) {
    if (count < 1) throw RegressError("make_lambda_grid: count must be positive");
    const StdProblem sp = standardize(X, y, w, intercept);
    double lmax = lambda_max_of(sp);
    if (!(lmax > 0.0) || !std::isfinite(lmax)) lmax = 1.0;  // degenerate: all excluded
    Eigen::VectorXd grid(count);
    if (count == 1) {
        grid(0) = lmax;
        return grid;
    }
    const double lmin = ratio * lmax;
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        grid(i) = std::exp(std::log(lmax) + f * (std::log(lmin) - std::log(lmax)));
    }
    grid(0) = lmax;
    return grid;
}

namespace {

struct CdSolution {
    Eigen::VectorXd beta_hat;  // over penalized columns
    int sweeps = 0;
    bool converged = true;
    double kkt = 0.0;
};

// KKT violation in the standardized problem: for zero coefficients
// max(0, |2 rho_j| - lh*w_j); for active ones |2 rho_j - lh*w_j*sign|.
double kkt_violation(const StdProblem& sp, const Eigen::VectorXd& beta_hat, double lh,
                     const Eigen::VectorXd& rho) {
    double v = 0.0;
    for (long a = 0; a < beta_hat.size(); ++a) {
        const double g = 2.0 * rho(a);
        if (beta_hat(a) == 0.0)
            v = std::max(v, std::abs(g) - lh * sp.w_hat(a));
        else
            v = std::max(v, std::abs(g - lh * sp.w_hat(a) * (beta_hat(a) > 0 ? 1.0 : -1.0)));
    }
    return std::max(0.0, v);
}

// Closed-form refinement on the active set: solve the exact stationarity
// system for the current signs, re-adding KKT violators until consistent.
void active_set_polish(const StdProblem& sp, double lh, Eigen::VectorXd& beta_hat) {
    const long q = beta_hat.size();
    std::vector<char> in_active(static_cast<std::size_t>(q), 0);
    for (long a = 0; a < q; ++a) in_active[static_cast<std::size_t>(a)] = beta_hat(a) != 0.0;

    for (int pass = 0; pass < 100; ++pass) {
        std::vector<int> A;
        for (long a = 0; a < q; ++a)
            if (in_active[static_cast<std::size_t>(a)]) A.push_back(static_cast<int>(a));
        Eigen::VectorXd trial = Eigen::VectorXd::Zero(q);
        if (!A.empty()) {
            const long m = static_cast<long>(A.size());
            Eigen::MatrixXd Gaa(m, m);
            Eigen::VectorXd rhs(m);
            for (long r = 0; r < m; ++r) {
                for (long s = 0; s < m; ++s) Gaa(r, s) = sp.G(A[static_cast<std::size_t>(r)],
                                                              A[static_cast<std::size_t>(s)]);
                const int a = A[static_cast<std::size_t>(r)];
                const double sgn = beta_hat(a) > 0 ? 1.0 : (beta_hat(a) < 0 ? -1.0 : 0.0);
                rhs(r) = sp.c(a) - 0.5 * lh * sp.w_hat(a) * sgn;
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Gaa);
            if (ldlt.info() != Eigen::Success) return;  // keep CD solution
            const Eigen::VectorXd ba = ldlt.solve(rhs);
            // reject if a sign flipped: drop those coordinates and retry
            bool flipped = false;
            for (long r = 0; r < m; ++r) {
                const int a = A[static_cast<std::size_t>(r)];
                const double sgn = beta_hat(a) > 0 ? 1.0 : -1.0;
                if (ba(r) * sgn < 0.0) {
                    in_active[static_cast<std::size_t>(a)] = 0;
                    flipped = true;
                }
            }
            if (flipped) continue;
            for (long r = 0; r < m; ++r) trial(A[static_cast<std::size_t>(r)]) = ba(r);
        }
        // inactive KKT check
        const Eigen::VectorXd rho = sp.c - sp.G * trial;
        int worst = -1;
        double worst_v = 1e-10 * std::max(1.0, sp.c.cwiseAbs().maxCoeff());
        for (long a = 0; a < q; ++a) {
            if (in_active[static_cast<std::size_t>(a)]) continue;
            const double v = std::abs(2.0 * rho(a)) - lh * sp.w_hat(a);
            if (v > worst_v) {
                worst_v = v;
                worst = static_cast<int>(a);
            }
        }
        if (worst < 0) {
            beta_hat = trial;
            // keep signs consistent for the next KKT evaluation
            return;
        }
        in_active[static_cast<std::size_t>(worst)] = 1;
        beta_hat(worst) = 2.0 * rho(worst) > 0 ? 1e-300 : -1e-300;  // seed the sign
    }
}

CdSolution solve_one_lambda(const StdProblem& sp, double lambda_natural,
                            const Eigen::VectorXd& warm) {
    const long q = static_cast<long>(sp.penalized.size());
    const double lh = lambda_natural / sp.sigma;  // lambda in the scaled problem
    CdSolution sol;
    sol.beta_hat = warm;

    Eigen::VectorXd rho = sp.c - sp.G * sol.beta_hat;

    long sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double max_delta = 0.0;
        for (long a = 0; a < q; ++a) {
            const double old = sol.beta_hat(a);
            const double z = rho(a) + sp.G(a, a) * old;
            const double nb = soft_threshold(z, 0.5 * lh * sp.w_hat(a)) / sp.G(a, a);
            if (nb != old) {
                sol.beta_hat(a) = nb;
                rho.noalias() -= sp.G.col(a) * (nb - old);
                max_delta = std::max(max_delta, std::abs(nb - old));
            }
        }
        if (max_delta < kCdTol) break;
    }
    sol.sweeps = static_cast<int>(sweep + 1);
    sol.converged = sweep < kMaxSweeps;

    active_set_polish(sp, lh, sol.beta_hat);
    rho = sp.c - sp.G * sol.beta_hat;
    sol.kkt = kkt_violation(sp, sol.beta_hat, lh, rho);
    return sol;
}

}  // namespace

LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     const Eigen::VectorXd& lambdas, std::optional<int> intercept) {
    for (long i = 1; i < lambdas.size(); ++i)
        if (!(lambdas(i) < lambdas(i - 1)))
            throw RegressError("lasso_path: lambda grid must be strictly descending");
    const StdProblem sp = standardize(X, y, w, intercept);
    const long q = static_cast<long>(sp.penalized.size());
    const long L = lambdas.size();

    LassoPath path;
    path.lambdas = lambdas;
    path.coefs = Eigen::MatrixXd::Zero(sp.p, L);
    path.resid_norm.resize(L);
    path.weighted_l1.resize(L);
    path.kkt.resize(L);
    path.sweeps.resize(static_cast<std::size_t>(L));
    path.converged.resize(static_cast<std::size_t>(L));

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(q);
    for (long i = 0; i < L; ++i) {
        CdSolution sol = solve_one_lambda(sp, lambdas(i), warm);
        warm = sol.beta_hat;
        path.sweeps[static_cast<std::size_t>(i)] = sol.sweeps;
        path.converged[static_cast<std::size_t>(i)] = sol.converged;
        path.kkt(i) = sol.kkt;
        if (!sol.converged)
            path.warnings.push_back("lasso: max sweeps reached at lambda index " +
                                    std::to_string(i));

        // natural units
        Eigen::VectorXd beta_nat = Eigen::VectorXd::Zero(sp.p);
        for (long a = 0; a < q; ++a) {
            const int j = sp.penalized[static_cast<std::size_t>(a)];
            beta_nat(j) = sp.sigma * sol.beta_hat(a) / sp.scale(j);
        }
        if (sp.intercept) {
            double b0 = sp.y_mean;
            for (long a = 0; a < q; ++a) {
                const int j = sp.penalized[static_cast<std::size_t>(a)];
                b0 -= beta_nat(j) * sp.col_mean(j);
            }
            beta_nat(*sp.intercept) = b0;
        }
        path.coefs.col(i) = beta_nat;

        // residual norm via the scaled quadratic form (exact, cheap)
        double rss_hat = sp.yy - 2.0 * sol.beta_hat.dot(sp.c) +
                         sol.beta_hat.dot(sp.G * sol.beta_hat);
        rss_hat = std::max(0.0, rss_hat);
        path.resid_norm(i) = sp.sigma * std::sqrt(rss_hat);

        // weighted l1 of the fully standardized coefficients beta*s_x/s_y;
        // dimensionless, so the log1p curve is invariant under rescaling the
        // data
        double l1 = 0.0;
        for (long a = 0; a < q; ++a) {
            const int j = sp.penalized[static_cast<std::size_t>(a)];
            l1 += sp.w_nat(j) * std::abs(beta_nat(j)) * sp.scale(j) / sp.sigma;
        }
        path.weighted_l1(i) = l1;
    }
    return path;
}

ParetoPick pareto_select(const LassoPath& path) {
    const long L = path.lambdas.size();
    if (L < 3) throw RegressError("pareto_select: need at least 3 lambdas");

    Eigen::VectorXd px(L), py(L);
    for (long i = 0; i < L; ++i) {
        px(i) = std::log(std::max(path.resid_norm(i), 1e-300));
        py(i) = std::log1p(path.weighted_l1(i));
    }
    const double ax = px(0), ay = py(0), bx = px(L - 1), by = py(L - 1);
    const double chord = std::hypot(bx - ax, by - ay);

    ParetoPick pick;
    if (chord < 1e-12) {
        pick.degenerate = true;
    } else {
        double best = 0.0;
        int best_i = -1;
        for (long i = 1; i + 1 < L; ++i) {
            const double cross = (bx - ax) * (py(i) - ay) - (by - ay) * (px(i) - ax);
            const double d = std::abs(cross) / chord;
            if (d > best + 1e-15) {
                best = d;
                best_i = static_cast<int>(i);
            }
        }
        if (best_i < 0 || best < 1e-9 * chord) {
            pick.degenerate = true;  // collinear within tolerance
        } else {
            pick.index = best_i;
            pick.lambda = path.lambdas(best_i);
            return pick;
        }
    }

    // degenerate fallback: largest lambda within 1.05x of the best residual
    const double rmin = path.resid_norm.minCoeff();
    for (long i = 0; i < L; ++i) {
        if (path.resid_norm(i) <= 1.05 * rmin) {
            pick.index = static_cast<int>(i);
            pick.lambda = path.lambdas(i);
            return pick;
        }
    }
    pick.index = static_cast<int>(L - 1);
    pick.lambda = path.lambdas(L - 1);
    return pick;
}

double aic(double rss, long n, long k) {
    if (n <= 0) throw RegressError("aic: n must be positive");
    if (rss < 0.0) throw RegressError("aic: negative rss");
    return static_cast<double>(n) * std::log(std::max(rss, kRssGuard) / static_cast<double>(n)) +
           2.0 * (static_cast<double>(k) + 1.0);
}

std::optional<double> SparseModel::coefficient(const std::string& term) const {
    for (const auto& [name, v] : coefficients)
        if (name == term) return v;
    return std::nullopt;
}

std::vector<std::string> SparseModel::support() const {
    std::vector<std::string> s;
    for (const auto& [name, v] : coefficients) s.push_back(name);
    return s;
}

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<long>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a)
        out.col(static_cast<long>(a)) = X.col(cols[a]);
    return out;
}

}  // namespace

std::pair<SparseModel, RALTrace> recurrent_adaptive_lasso(const DesignMatrix& dm) {
    if (dm.complex_entries)
        throw RegressError("recurrent_adaptive_lasso: complexify the design matrix first");
    const Eigen::MatrixXd& X = dm.X;
    const Eigen::VectorXd& y = dm.y;
    const long n = X.rows(), p = X.cols();
    if (n == 0 || p == 0) throw RegressError("recurrent_adaptive_lasso: empty design");

    RALTrace trace;
    if (n < 2 * p)
        trace.warnings.push_back("fewer than 2x rows per column; estimates may be unstable");
    const double y_spread = (y.array() - y.mean()).abs().maxCoeff();
    if (!(y_spread > 0.0)) throw RegressError("recurrent_adaptive_lasso: constant target");

    const std::optional<int> intercept = dm.constant_column();

    for (int gamma = 1; gamma <= 5; ++gamma) {
        std::vector<int> J(static_cast<std::size_t>(p));
        std::iota(J.begin(), J.end(), 0);
        std::vector<int> J_prev;  // NULL sentinel
        int k = 1;
        while (J != J_prev && !J.empty()) {
            const Eigen::MatrixXd Xj = submatrix(X, J);
            OlsResult fit = ols(Xj, y);

            // intercept position within the subset, if still present
            std::optional<int> icpt;
            for (std::size_t a = 0; a < J.size(); ++a)
                if (intercept && J[a] == *intercept) icpt = static_cast<int>(a);

            // Eq.-(7) weights from the standardized OLS coefficients, so the
            // penalty ordering is invariant under column rescaling
            const bool center = icpt.has_value();
            const double y_mean = center ? y.mean() : 0.0;
            double sigma_y = std::sqrt((y.array() - y_mean).square().mean());
            if (!(sigma_y > 0.0)) sigma_y = 1.0;
            Eigen::VectorXd beta_std(fit.beta.size());
            for (long a = 0; a < fit.beta.size(); ++a) {
                const double m = center ? Xj.col(a).mean() : 0.0;
                const double s = std::sqrt((Xj.col(a).array() - m).square().mean());
                beta_std(a) = fit.beta(a) * s / sigma_y;
            }
            Eigen::VectorXd w = adaptive_weights(beta_std, static_cast<double>(gamma));

            const Eigen::VectorXd grid = make_lambda_grid(Xj, y, w, 100, 1e-4, icpt);
            const LassoPath path = lasso_path(Xj, y, w, grid, icpt);
            const ParetoPick pick = pareto_select(path);
            for (const auto& msg : path.warnings) trace.warnings.push_back(msg);

            // active set = nonzero penalized coefficients; the unpenalized
            // intercept is fit machinery, not a selectable term
            std::vector<int> active;
            for (std::size_t a = 0; a < J.size(); ++a) {
                if (icpt && static_cast<int>(a) == *icpt) continue;
                if (path.coefs(static_cast<long>(a), pick.index) != 0.0) active.push_back(J[a]);
            }

            RALRecord rec;
            rec.gamma = gamma;
            rec.k = k;
            rec.candidate_cols = J;
            rec.ols_weights.assign(w.data(), w.data() + w.size());
            rec.active_cols = active;
            rec.lambda_star = pick.lambda;
            rec.pareto_degenerate = pick.degenerate;
            if (active.empty()) {
                rec.rss = y.squaredNorm();
                rec.aic_value = aic(rec.rss, n, 0);
            } else {
                OlsResult refit = ols(submatrix(X, active), y);
                rec.refit_beta.assign(refit.beta.data(), refit.beta.data() + refit.beta.size());
                rec.rss = refit.rss;
                rec.aic_value = aic(rec.rss, n, static_cast<long>(active.size()));
            }
            trace.records.push_back(std::move(rec));

            J_prev = J;
            J = trace.records.back().active_cols;
            ++k;
        }
    }

    // minimum AIC; ties -> smaller support, then smaller gamma, then earlier k
    int best = -1;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const RALRecord& a = trace.records[i];
        const RALRecord& b = trace.records[static_cast<std::size_t>(best)];
        const auto key = [](const RALRecord& r) {
            return std::make_tuple(r.aic_value, r.active_cols.size(), r.gamma, r.k);
        };
        if (key(a) < key(b)) best = static_cast<int>(i);
    }
    trace.chosen = best;

    SparseModel model;
    model.method = "RAL";
    model.n_rows = n;
    model.warnings = trace.warnings;
    if (best < 0) {
        model.null_model = true;
        model.rss = y.squaredNorm();
        model.aic_value = aic(model.rss, n, 0);
        return {model, trace};
    }
    const RALRecord& chosen = trace.records[static_cast<std::size_t>(best)];
    model.gamma = chosen.gamma;
    model.iteration = chosen.k;
    model.lambda_star = chosen.lambda_star;
    if (chosen.active_cols.empty()) {
        model.null_model = true;
        model.rss = chosen.rss;
        model.aic_value = chosen.aic_value;
        return {model, trace};
    }
    OlsResult refit = ols(submatrix(X, chosen.active_cols), y);
    model.rank_deficient = refit.rank_deficient;
    model.rss = refit.rss;
    model.n_active = static_cast<int>(chosen.active_cols.size());
    model.aic_value = aic(model.rss, n, model.n_active);
    for (std::size_t a = 0; a < chosen.active_cols.size(); ++a)
        model.coefficients.emplace_back(
            dm.term_names[static_cast<std::size_t>(chosen.active_cols[a])],
            refit.beta(static_cast<long>(a)));
    return {model, trace};
}

double stridge_default_ridge(const DesignMatrix& dm) {
    return 1e-5 * static_cast<double>(dm.cols());
}

SparseModel stridge(const DesignMatrix& dm, double lambda_ridge, double d_tol, int max_iter) {
    if (dm.complex_entries) throw RegressError("stridge: complexify the design matrix first");
    if (lambda_ridge < 0.0) throw RegressError("stridge: lambda_ridge must be >= 0");
    if (!(d_tol > 0.0)) throw RegressError("stridge: d_tol must be positive");
    const Eigen::MatrixXd& X = dm.X;
    const Eigen::VectorXd& y = dm.y;
    const long n = X.rows(), p = X.cols();
    if (n == 0 || p == 0) throw RegressError("stridge: empty design");

    // thresholding operates on unit-l2-normalized columns (the cited
    // baseline's convention); d_tol is meaningless in raw units
    Eigen::VectorXd norms(p);
    for (long j = 0; j < p; ++j) norms(j) = X.col(j).norm();

    const Eigen::MatrixXd G = X.transpose() * X;
    const Eigen::VectorXd c = X.transpose() * y;

    std::vector<int> active;
    for (long j = 0; j < p; ++j)
        if (norms(j) > 0.0) active.push_back(static_cast<int>(j));

    SparseModel model;
    model.method = "STRidge";
    model.d_tol = d_tol;
    model.n_rows = n;

    for (int iter = 0; iter < max_iter && !active.empty(); ++iter) {
        const long m = static_cast<long>(active.size());
        Eigen::MatrixXd Gn(m, m);
        Eigen::VectorXd cn(m);
        for (long r = 0; r < m; ++r) {
            const int jr = active[static_cast<std::size_t>(r)];
            cn(r) = c(jr) / norms(jr);
            for (long s = 0; s < m; ++s) {
                const int js = active[static_cast<std::size_t>(s)];
                Gn(r, s) = G(jr, js) / (norms(jr) * norms(js));
            }
        }
        Gn.diagonal().array() += lambda_ridge;
        const Eigen::VectorXd beta_n = Gn.ldlt().solve(cn);

        std::vector<int> kept;
        for (long r = 0; r < m; ++r)
            if (std::abs(beta_n(r)) >= d_tol) kept.push_back(active[static_cast<std::size_t>(r)]);
        if (kept == active) break;
        active = std::move(kept);
    }

    if (active.empty()) {
        model.null_model = true;
        model.rss = y.squaredNorm();
        model.aic_value = aic(model.rss, n, 0);
        return model;
    }
    OlsResult refit = ols(submatrix(X, active), y);
    model.rank_deficient = refit.rank_deficient;
    model.rss = refit.rss;
    model.n_active = static_cast<int>(active.size());
    model.aic_value = aic(model.rss, n, model.n_active);
    for (std::size_t a = 0; a < active.size(); ++a)
        model.coefficients.emplace_back(dm.term_names[static_cast<std::size_t>(active[a])],
                                        refit.beta(static_cast<long>(a)));
    return model;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

}  // namespace

std::string to_json(const SparseModel& model, const RALTrace* trace) {
    std::ostringstream os;
    os << "{\n  \"method\": \"" << json_escape(model.method) << "\",\n";
    os << "  \"coefficients\": {";
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
        if (i) os << ", ";
        os << "\"" << json_escape(model.coefficients[i].first)
           << "\": " << fmt17(model.coefficients[i].second);
    }
    os << "},\n";
    os << "  \"rss\": " << fmt17(model.rss) << ",\n";
    os << "  \"n_rows\": " << model.n_rows << ",\n";
    os << "  \"n_active\": " << model.n_active << ",\n";
    os << "  \"aic\": " << fmt17(model.aic_value) << ",\n";
    os << "  \"null_model\": " << (model.null_model ? "true" : "false") << ",\n";
    os << "  \"rank_deficient\": " << (model.rank_deficient ? "true" : "false") << ",\n";
    if (model.method == "RAL") {
        os << "  \"gamma\": " << model.gamma << ",\n";
        os << "  \"iteration\": " << model.iteration << ",\n";
        os << "  \"lambda_star\": " << fmt17(model.lambda_star) << ",\n";
    } else {
        os << "  \"d_tol\": " << fmt17(model.d_tol) << ",\n";
    }
    os << "  \"warnings\": [";
    for (std::size_t i = 0; i < model.warnings.size(); ++i) {
        if (i) os << ", ";
        os << "\"" << json_escape(model.warnings[i]) << "\"";
    }
    os << "]";
    if (trace != nullptr) {
        os << ",\n  \"trace\": [\n";
        for (std::size_t i = 0; i < trace->records.size(); ++i) {
            const RALRecord& r = trace->records[i];
            os << "    {\"gamma\": " << r.gamma << ", \"k\": " << r.k
               << ", \"lambda_star\": " << fmt17(r.lambda_star)
               << ", \"aic\": " << fmt17(r.aic_value) << ", \"candidate_cols\": [";
            for (std::size_t a = 0; a < r.candidate_cols.size(); ++a) {
                if (a) os << ",";
                os << r.candidate_cols[a];
            }
            os << "], \"active_cols\": [";
            for (std::size_t a = 0; a < r.active_cols.size(); ++a) {
                if (a) os << ",";
                os << r.active_cols[a];
            }
            os << "], \"chosen\": " << (static_cast<int>(i) == trace->chosen ? "true" : "false")
               << "}";
            if (i + 1 < trace->records.size()) os << ",";
            os << "\n";
        }
        os << "  ]";
    }
    os << "\n}\n";
    return os.str();
}

void write_model(const SparseModel& model, const std::filesystem::path& path,
                 const RALTrace* trace) {
    std::ofstream os(path);
    if (!os) throw RegressError("cannot open for writing: " + path.string());
    os << to_json(model, trace);
}

}  // namespace pdeid
