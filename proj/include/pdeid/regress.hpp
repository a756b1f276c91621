// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_REGRESS_HPP
#define PDEID_REGRESS_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdeid/library.hpp"

namespace pdeid {

class RegressError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct OlsResult {
    Eigen::VectorXd beta;
    double rss = 0.0;
    bool rank_deficient = false;
    long rank = 0;
};

// Least squares via a rank-revealing orthogonal factorization; rank-deficient
// systems get the minimum-norm solution and a deficiency flag.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// w_j = |beta_j|^(-gamma); exact zeros map to +inf, which excludes the column
// from the penalized fit entirely (no small-nonzero floor).
Eigen::VectorXd adaptive_weights(const Eigen::VectorXd& beta_ols, double gamma);

// Regularization path of
//   argmin ||y - X b||_2^2 + lambda * sum_j w_j |b_j * s_j|
// where s_j is the column scale, i.e. the weighted penalty acts on the
// internally standardized coefficients; this keeps the selected support
// invariant under column rescaling. Solved by cyclic coordinate descent with
// warm starts; the constant column (if present) is an unpenalized intercept.
// Coefficients are reported in natural units. On a zero-mean design with
// unit-l2-norm columns and unit weights the solution is
// soft-threshold(beta_ols_j, lambda / (2 sqrt(n))).
struct LassoPath {
    Eigen::VectorXd lambdas;      // strictly descending
    Eigen::MatrixXd coefs;        // p x L, natural units
    Eigen::VectorXd resid_norm;   // ||y - X b||_2 per lambda
    Eigen::VectorXd weighted_l1;  // sum_j w_j |b_j| per lambda (natural units)
    Eigen::VectorXd kkt;          // max KKT violation per lambda (standardized)
    std::vector<int> sweeps;
    std::vector<bool> converged;
    std::vector<std::string> warnings;
};

// lambda_max is the smallest lambda with an all-zero penalized fit; the grid
// has `count` log-spaced values down to ratio*lambda_max.
Eigen::VectorXd make_lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, int count = 100, double ratio = 1e-4,
                                 std::optional<int> intercept = std::nullopt);

LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, const Eigen::VectorXd& lambdas,
                     std::optional<int> intercept = std::nullopt);

// Corner of the (log residual norm, log(1 + weighted l1)) curve by the
// maximum-distance-to-chord rule; ties break toward larger lambda. A
// degenerate (collinear) path falls back to the largest lambda within 1.05x
// of the minimum residual, flagged.
struct ParetoPick {
    int index = 0;
    double lambda = 0.0;
    bool degenerate = false;
};
ParetoPick pareto_select(const LassoPath& path);

// AIC = n*ln(max(rss, eps)/n) + 2*(k+1)
double aic(double rss, long n, long k);

// Identified sparse model with fit statistics.
struct SparseModel {
    // nonzero coefficients in library column order
    std::vector<std::pair<std::string, double>> coefficients;
    double rss = 0.0;
    long n_rows = 0;
    int n_active = 0;
    double aic_value = 0.0;
    std::string method;  // "RAL" or "STRidge"
    double gamma = 0.0;  // RAL provenance
    int iteration = 0;
    double lambda_star = 0.0;
    double d_tol = 0.0;  // STRidge provenance
    bool null_model = false;
    bool rank_deficient = false;
    std::vector<std::string> warnings;

    std::optional<double> coefficient(const std::string& term) const;
    std::vector<std::string> support() const;
};

struct RALRecord {
    int gamma = 0;
    int k = 0;
    std::vector<int> candidate_cols;  // J^(gamma,k) entering the iteration
    std::vector<double> ols_weights;  // aligned with candidate_cols
    std::vector<int> active_cols;     // selected by the lasso at lambda*
    std::vector<double> refit_beta;   // OLS refit on active_cols
    double lambda_star = 0.0;
    bool pareto_degenerate = false;
    double rss = 0.0;
    double aic_value = 0.0;
};

struct RALTrace {
    std::vector<RALRecord> records;
    int chosen = -1;  // index into records
    std::vector<std::string> warnings;
};

// Algorithm: for gamma in 1..5, iterate OLS weights (from the standardized
// coefficients) -> weighted lasso at the Pareto-selected lambda -> keep the
// active set, until the set stabilizes; the final model is the OLS refit on
// the minimum-AIC candidate. AIC ties break toward smaller support, then
// smaller gamma, then earlier iteration.
std::pair<SparseModel, RALTrace> recurrent_adaptive_lasso(const DesignMatrix& dm);

// Sequential-threshold ridge baseline: ridge on unit-l2-normalized columns,
// hard-threshold |b| < d_tol in those units, repeat, final OLS refit on the
// survivors in natural units.
SparseModel stridge(const DesignMatrix& dm, double lambda_ridge, double d_tol, int max_iter = 25);
double stridge_default_ridge(const DesignMatrix& dm);  // 1e-5 * cols

// text serialization (JSON, 17 significant digits)
std::string to_json(const SparseModel& model, const RALTrace* trace = nullptr);
void write_model(const SparseModel& model, const std::filesystem::path& path,
                 const RALTrace* trace = nullptr);

}  // namespace pdeid

#endif
