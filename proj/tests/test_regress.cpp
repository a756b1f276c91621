// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "pdeid/regress.hpp"
#include "pdeid/rng.hpp"

using namespace pdeid;

namespace {

// design matrix wrapper around a plain Eigen system
DesignMatrix wrap(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  std::vector<std::string> names = {}) {
    DesignMatrix dm;
    dm.X = X;
    dm.y = y;
    if (names.empty())
        for (long j = 0; j < X.cols(); ++j) names.push_back("c" + std::to_string(j));
    dm.term_names = names;
    dm.terms.resize(static_cast<std::size_t>(X.cols()));
    dm.row_index.resize(static_cast<std::size_t>(X.rows()));
    std::iota(dm.row_index.begin(), dm.row_index.end(), 0);
    return dm;
}

// zero-mean matrix with orthonormal columns
Eigen::MatrixXd orthonormal_centered(long n, long p, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
    X.rowwise() -= X.colwise().mean();
    // Gram-Schmidt keeps columns zero-mean
    for (long j = 0; j < p; ++j) {
        for (long k = 0; k < j; ++k) X.col(j) -= X.col(k).dot(X.col(j)) * X.col(k);
        X.col(j) /= X.col(j).norm();
    }
    return X;
}

}  // namespace

TEST_CASE("ols: identity design") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    OlsResult r = ols(X, y);
    CHECK(r.beta(0) == doctest::Approx(1.0));
    CHECK(r.beta(1) == doctest::Approx(2.0));
    CHECK(r.beta(2) == doctest::Approx(3.0));
    CHECK(r.rss == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_FALSE(r.rank_deficient);
}

TEST_CASE("ols: exact recovery on a noiseless well-conditioned system") {
    Rng rng(12);
    Eigen::MatrixXd X(50, 4);
    for (long i = 0; i < 50; ++i)
        for (long j = 0; j < 4; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta(4);
    beta << 2.0, -1.0, 0.5, 3.0;
    Eigen::VectorXd y = X * beta;
    OlsResult r = ols(X, y);
    CHECK((r.beta - beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ols: target orthogonal to the column span") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, 0, 1, 0, 0, 0, 0;
    Eigen::VectorXd y(4);
    y << 0, 0, 2, 1;
    OlsResult r = ols(X, y);
    CHECK(r.beta.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(r.rss == doctest::Approx(y.squaredNorm()));
}

TEST_CASE("ols: errors and rank deficiency") {
    Eigen::MatrixXd X(2, 3);
    X.setOnes();
    Eigen::VectorXd y(2);
    y.setOnes();
    CHECK_THROWS_AS(ols(X, y), RegressError);

    Eigen::MatrixXd Xd(6, 2);
    for (long i = 0; i < 6; ++i) {
        Xd(i, 0) = i + 1.0;
        Xd(i, 1) = 2.0 * (i + 1.0);  // exactly proportional
    }
    Eigen::VectorXd yd = Xd.col(0);
    OlsResult r = ols(Xd, yd);
    CHECK(r.rank_deficient);
    CHECK(r.rank == 1);
    CHECK((Xd * r.beta - yd).norm() < 1e-10);  // min-norm still fits

    Eigen::MatrixXd Xn(3, 1);
    Xn << 1, std::nan(""), 2;
    Eigen::VectorXd yn(3);
    yn.setOnes();
    CHECK_THROWS_AS(ols(Xn, yn), RegressError);
}

TEST_CASE("adaptive_weights examples") {
    Eigen::VectorXd b1(2);
    b1 << 1, 1;
    CHECK(adaptive_weights(b1, 3.0).isApprox(Eigen::VectorXd::Ones(2)));

    Eigen::VectorXd b2(2);
    b2 << 2, 0.5;
    Eigen::VectorXd w2 = adaptive_weights(b2, 2.0);
    CHECK(w2(0) == doctest::Approx(0.25));
    CHECK(w2(1) == doctest::Approx(4.0));

    Eigen::VectorXd b3(2);
    b3 << 0, 1;
    Eigen::VectorXd w3 = adaptive_weights(b3, 1.0);
    CHECK(std::isinf(w3(0)));
    CHECK(w3(1) == doctest::Approx(1.0));

    CHECK_THROWS_AS(adaptive_weights(b1, 0.0), RegressError);
}

TEST_CASE("lasso: an infinite-weight sentinel excludes the column entirely") {
    Rng rng(3);
    Eigen::MatrixXd X(40, 2);
    for (long i = 0; i < 40; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = rng.normal();
    }
    Eigen::VectorXd y = X.col(1) * 2.0;
    Eigen::VectorXd w(2);
    w << std::numeric_limits<double>::infinity(), 1.0;
    Eigen::VectorXd grid = make_lambda_grid(X, y, w);
    LassoPath path = lasso_path(X, y, w, grid);
    CHECK(path.coefs.row(0).cwiseAbs().maxCoeff() == 0.0);
    // the grid floor is 1e-4 * lambda_max, so a trace of shrinkage remains
    CHECK(path.coefs(1, grid.size() - 1) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("lasso at lambda -> 0 equals OLS") {
    Rng rng(21);
    Eigen::MatrixXd X(60, 4);
    for (long i = 0; i < 60; ++i)
        for (long j = 0; j < 4; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y(60);
    for (long i = 0; i < 60; ++i) y(i) = rng.normal();
    OlsResult ref = ols(X, y);
    Eigen::VectorXd grid(2);
    grid << 1e-9, 0.0;
    LassoPath path = lasso_path(X, y, Eigen::VectorXd::Ones(4), grid);
    CHECK((path.coefs.col(1) - ref.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lasso on an orthonormal design follows the soft-threshold closed form") {
    const long n = 64, p = 5;
    Eigen::MatrixXd X = orthonormal_centered(n, p, 5);
    Rng rng(6);
    Eigen::VectorXd y(n);
    for (long i = 0; i < n; ++i) y(i) = rng.normal();
    const Eigen::VectorXd beta_ols = X.transpose() * y;

    Eigen::VectorXd w = Eigen::VectorXd::Ones(p);
    Eigen::VectorXd grid = make_lambda_grid(X, y, w, 40);
    LassoPath path = lasso_path(X, y, w, grid);
    // the documented scaling: beta_j(lambda) = S(beta_ols_j, lambda/(2 sqrt(n)))
    for (long i = 0; i < grid.size(); ++i) {
        const double t = grid(i) / (2.0 * std::sqrt(static_cast<double>(n)));
        for (long j = 0; j < p; ++j) {
            const double s = std::abs(beta_ols(j)) <= t
                                 ? 0.0
                                 : beta_ols(j) - (beta_ols(j) > 0 ? t : -t);
            CHECK(path.coefs(j, i) == doctest::Approx(s).epsilon(1e-8).scale(1.0));
        }
    }
    // all penalized coefficients vanish at lambda_max
    CHECK(path.coefs.col(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lasso KKT residuals stay below 1e-6 on random instances") {
    for (int rep = 0; rep < 50; ++rep) {
        Rng rng(1000 + rep);
        Eigen::MatrixXd X(30, 8);
        for (long i = 0; i < 30; ++i)
            for (long j = 0; j < 8; ++j) X(i, j) = rng.normal();
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
        beta(1) = 2.0;
        beta(5) = -1.0;
        Eigen::VectorXd y = X * beta;
        for (long i = 0; i < 30; ++i) y(i) += 0.05 * rng.normal();
        Eigen::VectorXd w(8);
        for (long j = 0; j < 8; ++j) w(j) = 0.5 + rng.uniform();
        Eigen::VectorXd grid = make_lambda_grid(X, y, w, 30);
        LassoPath path = lasso_path(X, y, w, grid);
        CHECK(path.kkt.maxCoeff() < 1e-6);
        for (std::size_t i = 0; i < path.converged.size(); ++i) CHECK(path.converged[i]);
    }
}

TEST_CASE("lasso path residuals are monotone non-increasing in lambda") {
    Rng rng(77);
    Eigen::MatrixXd X(50, 6);
    for (long i = 0; i < 50; ++i)
        for (long j = 0; j < 6; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y(50);
    for (long i = 0; i < 50; ++i) y(i) = rng.normal();
    Eigen::VectorXd grid = make_lambda_grid(X, y, Eigen::VectorXd::Ones(6));
    LassoPath path = lasso_path(X, y, Eigen::VectorXd::Ones(6), grid);
    for (long i = 1; i < grid.size(); ++i)
        CHECK(path.resid_norm(i) <= path.resid_norm(i - 1) + 1e-10);
}

TEST_CASE("pareto_select finds a constructed two-segment knee") {
    // synthetic path: residual drops fast (sparse gains) then flattens while
    // the penalty keeps growing; the knee is the junction point
    const long L = 21;
    LassoPath path;
    path.lambdas.resize(L);
    path.resid_norm.resize(L);
    path.weighted_l1.resize(L);
    path.coefs = Eigen::MatrixXd::Zero(1, L);
    path.kkt = Eigen::VectorXd::Zero(L);
    for (long i = 0; i < L; ++i) {
        path.lambdas(i) = std::pow(10.0, 2.0 - 0.2 * i);
        if (i <= 10) {
            path.resid_norm(i) = std::pow(10.0, 2.0 - 0.4 * i);  // steep descent
            path.weighted_l1(i) = 0.2 * i;
        } else {
            path.resid_norm(i) = std::pow(10.0, -2.0);  // flat
            path.weighted_l1(i) = 2.0 + 1.5 * (i - 10);
        }
    }
    ParetoPick pick = pareto_select(path);
    CHECK(pick.index == 10);
    CHECK_FALSE(pick.degenerate);
}

TEST_CASE("pareto_select degenerate fallback: largest lambda within 1.05x of best") {
    const long L = 10;
    LassoPath path;
    path.lambdas.resize(L);
    path.resid_norm.resize(L);
    path.weighted_l1.resize(L);
    for (long i = 0; i < L; ++i) {
        path.lambdas(i) = std::pow(10.0, 1.0 - 0.2 * i);
        path.resid_norm(i) = 5.0 - 0.2 * i;      // collinear in the log-log plane?
        path.weighted_l1(i) = 0.0;               // flat penalty -> truly collinear
    }
    ParetoPick pick = pareto_select(path);
    CHECK(pick.degenerate);
    // residuals range 5.0 .. 3.2; 1.05 * 3.2 = 3.36 -> first index within is 9? walk:
    // resid(i) <= 3.36 first at i = 9 (3.2); index 8 gives 3.4 > 3.36
    CHECK(pick.index == 9);

    LassoPath tiny;
    tiny.lambdas.resize(2);
    CHECK_THROWS_AS(pareto_select(tiny), RegressError);
}

TEST_CASE("pareto_select recovers the support of a planted sparse model") {
    Rng rng(15);
    const long n = 120, p = 10;
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(2) = 3.0;
    beta(7) = -2.0;
    Eigen::VectorXd y = X * beta;
    for (long i = 0; i < n; ++i) y(i) += 0.01 * rng.normal();

    Eigen::VectorXd w = Eigen::VectorXd::Ones(p);
    Eigen::VectorXd grid = make_lambda_grid(X, y, w);
    LassoPath path = lasso_path(X, y, w, grid);
    ParetoPick pick = pareto_select(path);

    // brute-force oracle: the set of path indices whose support matches
    std::set<long> matching;
    for (long i = 0; i < grid.size(); ++i) {
        bool ok = true;
        for (long j = 0; j < p; ++j) {
            const bool active = path.coefs(j, i) != 0.0;
            ok = ok && (active == (j == 2 || j == 7));
        }
        if (ok) matching.insert(i);
    }
    REQUIRE(!matching.empty());
    CHECK(matching.count(pick.index) == 1);
}

TEST_CASE("pareto_select agrees with Menger curvature on a single-bend curve") {
    const long L = 41;
    LassoPath path;
    path.lambdas.resize(L);
    path.resid_norm.resize(L);
    path.weighted_l1.resize(L);
    for (long i = 0; i < L; ++i) {
        const double s = static_cast<double>(i) / (L - 1);
        path.lambdas(i) = std::pow(10.0, 1.0 - 2.0 * s);
        // smooth softplus knee at s = 0.5: log-residual drops then flattens
        // while the log-penalty grows linearly at a matched rate, keeping the
        // samples near-uniform in arc length -> a single curvature maximum
        path.resid_norm(i) = std::exp(0.5 * std::log1p(std::exp(30.0 * (0.5 - s))));
        path.weighted_l1(i) = std::expm1(15.0 * s);
    }
    ParetoPick pick = pareto_select(path);

    // discrete Menger curvature argmax on the same log-log points
    auto px = [&](long i) { return std::log(path.resid_norm(i)); };
    auto py = [&](long i) { return std::log1p(path.weighted_l1(i)); };
    double best = -1;
    long best_i = 0;
    for (long i = 1; i + 1 < L; ++i) {
        const double ax = px(i - 1), ay = py(i - 1), bx = px(i), by = py(i), cx = px(i + 1),
                     cy = py(i + 1);
        const double area2 = std::abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax));
        const double d1 = std::hypot(bx - ax, by - ay), d2 = std::hypot(cx - bx, cy - by),
                     d3 = std::hypot(cx - ax, cy - ay);
        const double curv = 2.0 * area2 / (d1 * d2 * d3);
        if (curv > best) {
            best = curv;
            best_i = i;
        }
    }
    CHECK(std::abs(pick.index - best_i) <= 1);
}

TEST_CASE("aic formula") {
    CHECK(aic(100.0, 100, 1) == doctest::Approx(4.0));
    const double r = 6.4;
    CHECK(aic(r / 2, 1000, 3) - aic(r, 1000, 3) == doctest::Approx(-1000.0 * std::log(2.0)));
    CHECK_THROWS_AS(aic(1.0, 0, 1), RegressError);
    CHECK(std::isfinite(aic(0.0, 10, 0)));  // the 1e-300 guard
}

TEST_CASE("recurrent adaptive lasso: single active term recovered exactly") {
    Rng rng(9);
    const long n = 200;
    Eigen::MatrixXd X(n, 5);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < 5; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y = 5.0 * X.col(2);
    DesignMatrix dm = wrap(X, y, {"1", "u", "u_x", "u_xx", "u*u_x"});
    dm.X.col(0).setOnes();  // constant column
    auto [model, trace] = recurrent_adaptive_lasso(dm);
    REQUIRE(model.support() == std::vector<std::string>{"u_x"});
    CHECK(*model.coefficient("u_x") == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(model.method == "RAL");
}

TEST_CASE("recurrent adaptive lasso: synthetic 200x10 support recovery at 60 dB") {
    Rng rng(33);
    const long n = 200, p = 10;
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(2) = 1.5;
    beta(7) = -2.5;
    Eigen::VectorXd y0 = X * beta;
    const double sigma_u = std::sqrt((y0.array() - y0.mean()).square().sum() / (n - 1));
    const double sigma_z = sigma_u * std::pow(10.0, -60.0 / 20.0);
    Eigen::VectorXd y = y0;
    for (long i = 0; i < n; ++i) y(i) += sigma_z * rng.normal();

    DesignMatrix dm = wrap(X, y);
    auto [model, trace] = recurrent_adaptive_lasso(dm);
    CHECK(model.support() == std::vector<std::string>{"c2", "c7"});
    CHECK(*model.coefficient("c2") == doctest::Approx(1.5).epsilon(0.02));
    CHECK(*model.coefficient("c7") == doctest::Approx(-2.5).epsilon(0.02));

    // Brute-force best-subset oracle over supports of size <= 2: the true
    // pair must be the AIC optimum there. (Supersets of the truth can win a
    // chi-squared coin flip against the 2-per-parameter AIC penalty at any
    // SNR, so size-3 supports are not a sound oracle for exactness.)
    double best_aic = 1e300;
    std::vector<int> best;
    for (int a = 0; a < p; ++a)
        for (int b = a; b < p; ++b) {
            std::set<int> s{a, b};
            std::vector<int> cols(s.begin(), s.end());
            Eigen::MatrixXd Xs(n, static_cast<long>(cols.size()));
            for (std::size_t k = 0; k < cols.size(); ++k)
                Xs.col(static_cast<long>(k)) = X.col(cols[k]);
            OlsResult f = ols(Xs, y);
            const double a_val = aic(f.rss, n, static_cast<long>(cols.size()));
            if (a_val < best_aic) {
                best_aic = a_val;
                best = cols;
            }
        }
    CHECK(best == std::vector<int>{2, 7});
}

TEST_CASE("recurrent adaptive lasso: trace invariants and AIC consistency") {
    Rng rng(41);
    const long n = 150, p = 8;
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(1) = 2.0;
    beta(4) = 1.0;
    Eigen::VectorXd y = X * beta;
    for (long i = 0; i < n; ++i) y(i) += 0.02 * rng.normal();

    DesignMatrix dm = wrap(X, y);
    auto [model, trace] = recurrent_adaptive_lasso(dm);

    // J^(gamma,k) nests within each gamma branch, and every branch is finite
    for (int g = 1; g <= 5; ++g) {
        std::vector<const RALRecord*> recs;
        for (const auto& r : trace.records)
            if (r.gamma == g) recs.push_back(&r);
        CHECK(recs.size() <= static_cast<std::size_t>(p) + 1);
        for (std::size_t k = 1; k < recs.size(); ++k) {
            const auto& prev = recs[k - 1]->active_cols;
            for (int c : recs[k]->active_cols)
                CHECK(std::find(prev.begin(), prev.end(), c) != prev.end());
        }
    }
    // reported AIC recomputable from the model's own fields
    CHECK(model.aic_value ==
          doctest::Approx(aic(model.rss, model.n_rows, model.n_active)).epsilon(1e-12));
}

TEST_CASE("recurrent adaptive lasso: support invariant under column rescaling") {
    Rng rng(33);  // same instance as the 60 dB test
    const long n = 200, p = 10;
    Eigen::MatrixXd X(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta(2) = 1.5;
    beta(7) = -2.5;
    Eigen::VectorXd y0 = X * beta;
    const double sigma_u = std::sqrt((y0.array() - y0.mean()).square().sum() / (n - 1));
    Eigen::VectorXd y = y0;
    for (long i = 0; i < n; ++i) y(i) += sigma_u * 1e-3 * rng.normal();

    for (double c : {1e-3, 1.0, 1e3}) {
        Eigen::MatrixXd Xs = X;
        Xs.col(2) *= c;
        auto [model, trace] = recurrent_adaptive_lasso(wrap(Xs, y));
        CHECK(model.support() == std::vector<std::string>{"c2", "c7"});
        CHECK(*model.coefficient("c2") == doctest::Approx(1.5 / c).epsilon(0.02));
    }
}

TEST_CASE("recurrent adaptive lasso: degenerate inputs") {
    Eigen::MatrixXd X(10, 2);
    X.setRandom();
    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 3.0);
    CHECK_THROWS_AS(recurrent_adaptive_lasso(wrap(X, y)), RegressError);

    // warn when rows < 2 * cols
    Rng rng(2);
    Eigen::MatrixXd Xs(10, 6);
    for (long i = 0; i < 10; ++i)
        for (long j = 0; j < 6; ++j) Xs(i, j) = rng.normal();
    Eigen::VectorXd ys = Xs.col(0);
    auto [model, trace] = recurrent_adaptive_lasso(wrap(Xs, ys));
    CHECK_FALSE(trace.warnings.empty());
}

TEST_CASE("stridge: degenerate thresholds reduce to OLS") {
    Rng rng(19);
    Eigen::MatrixXd X(80, 5);
    for (long i = 0; i < 80; ++i)
        for (long j = 0; j < 5; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta(5);
    beta << 1, -2, 3, -4, 5;
    Eigen::VectorXd y = X * beta;
    SparseModel m = stridge(wrap(X, y), 0.0, 1e-12);
    REQUIRE(m.n_active == 5);
    OlsResult ref = ols(X, y);
    for (long j = 0; j < 5; ++j)
        CHECK(m.coefficients[static_cast<std::size_t>(j)].second ==
              doctest::Approx(ref.beta(j)).epsilon(1e-10));
}

TEST_CASE("stridge: hard threshold eliminates the small coefficient first pass") {
    // unit-norm columns so the threshold acts on the natural coefficients
    Eigen::MatrixXd X = orthonormal_centered(50, 2, 23);
    Eigen::VectorXd y = 10.0 * X.col(0) + 0.5 * X.col(1);
    SparseModel m = stridge(wrap(X, y, {"big", "small"}), 1e-8, 2.0, 25);
    CHECK(m.support() == std::vector<std::string>{"big"});
    CHECK(*m.coefficient("big") == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(m.d_tol == 2.0);
}

TEST_CASE("stridge: eliminating everything flags a null model") {
    Eigen::MatrixXd X = orthonormal_centered(30, 3, 29);
    Eigen::VectorXd y = 0.01 * X.col(0);
    SparseModel m = stridge(wrap(X, y), 1e-8, 5.0);
    CHECK(m.null_model);
    CHECK(m.n_active == 0);
}

TEST_CASE("sparse model JSON serialization is well-formed with full precision") {
    SparseModel m;
    m.method = "RAL";
    m.coefficients = {{"u*u_x", -1.0000000000000004}, {"u_xx", 0.1}};
    m.rss = 1.5;
    m.n_rows = 100;
    m.n_active = 2;
    m.aic_value = aic(1.5, 100, 2);
    const std::string text = to_json(m);
    auto parsed = nlohmann::json::parse(text);
    CHECK(parsed["method"] == "RAL");
    CHECK(parsed["coefficients"]["u*u_x"].get<double>() == -1.0000000000000004);
    CHECK(parsed["n_active"] == 2);
}
