// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_BENCH_HPP
#define PDEID_BENCH_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdeid/datagen.hpp"
#include "pdeid/regress.hpp"

namespace pdeid {

class BenchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Support-and-sign identification check: true iff the model's nonzero support
// equals the truth's term set exactly and every coefficient's sign matches.
// Coefficient magnitudes are not compared.
bool models_match(const SparseModel& model, const GroundTruth& truth);

enum class ModelCategory { Null, ODE, Transport, Heat, OtherParsimonious, NonParsimonious };
std::string category_name(ModelCategory c);

// Table-1 style classification for single-field 1-D libraries: null model,
// u_t = c u^d, u_t = c u_x, u_t = c u_xx, other parsimonious (<= 3 terms),
// non-parsimonious (> 3 terms).
ModelCategory classify_model(const SparseModel& model);

// Overall-regression F-test of the OLS refit on the model's support against
// the intercept-only null; returns the upper-tail p-value of F(k, n-k-1).
struct FTestResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    bool exact_fit = false;
    bool significant = false;  // p < 0.05
};
FTestResult f_test(const SparseModel& model, const DesignMatrix& dm);

// Regularized incomplete beta I_x(a, b), exposed for the oracle tests.
double incomplete_beta(double a, double b, double x);

// model fit on an assembled design matrix
SparseModel identify_dm(const DesignMatrix& dm, const std::string& method, double d_tol = 2.0,
                        RALTrace* trace = nullptr);

// full pipeline: derivatives -> library -> sparse regression
SparseModel identify_field(const Field& field, const LibrarySpec& lib, const std::string& method,
                           double d_tol = 2.0, RALTrace* trace = nullptr,
                           DesignMatrix* dm_out = nullptr);

struct ExperimentSpec {
    SystemSpec system;
    std::string method = "RAL";  // "RAL" or "STRidge"
    double d_tol = 2.0;
    std::string sweep = "snr";  // snr | samplesize | whitenoise
    std::vector<double> grid;   // SNR dB values, N values, or sigma values
    int trials = 10;
    std::uint64_t base_seed = 0;
    LibrarySpec library;
    int jobs = 1;

    void validate() const;
};

struct TrialRecord {
    int grid_index = 0;
    int trial = 0;
    bool success = false;
    std::vector<std::pair<std::string, double>> coefficients;
    std::string classification;
    double f_p_value = 1.0;
    bool f_significant = false;
    double wall_seconds = 0.0;  // kept out of the CSV so reruns are byte-identical
    std::string error;
};

struct ResultTable {
    ExperimentSpec spec;
    GroundTruth truth;
    std::vector<TrialRecord> trials;       // trial-major, grid-minor ordering
    std::vector<int> success_count;        // per grid point
    std::vector<double> eta;               // per grid point

    void write_csv(const std::filesystem::path& path) const;
    void write_svg(const std::filesystem::path& path) const;
};

// Runs trials x grid evaluations of make_trial -> identify -> models_match.
// Per-trial failures are recorded and counted as non-success.
ResultTable run_sweep(const ExperimentSpec& spec);

// White-noise robustness study over (sigma, library, method) combinations;
// emits a Table-1 shaped classification summary.
struct WhitenoiseCell {
    double sigma = 0.0;
    std::string method;
    std::string library;  // e.g. "d3r3"
    std::array<int, 6> count{};        // indexed by ModelCategory
    std::array<int, 6> significant{};  // F-significant subset
    int trials = 0;
};

struct WhitenoiseTable {
    std::vector<WhitenoiseCell> cells;
    int trials = 0;
    std::uint64_t base_seed = 0;
    bool desk = true;

    void write_csv(const std::filesystem::path& path) const;
};

WhitenoiseTable whitenoise_study(const std::vector<double>& sigmas,
                                 const std::vector<LibrarySpec>& libraries,
                                 const std::vector<std::string>& methods, int trials,
                                 std::uint64_t base_seed, bool desk = true, double d_tol = 2.0,
                                 int jobs = 1);

// tiny stride-scheduled thread pool used by the sweeps
void parallel_for(long count, int jobs, const std::function<void(long)>& fn);

}  // namespace pdeid

#endif
