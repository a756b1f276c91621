// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_LIBRARY_HPP
#define PDEID_LIBRARY_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdeid/smoothdiff.hpp"

namespace pdeid {

class LibraryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One candidate term: a product of field monomials and at most one
// partial-derivative factor, e.g. u^2 * u_xx.
struct TermDescriptor {
    // (field_id, degree >= 1) pairs sorted by field_id; empty for degree 0
    std::vector<std::pair<int, int>> monomial;
    struct DerivFactor {
        int field = 0;
        int axis = 0;   // 0 = x, 1 = y
        int order = 1;
    };
    std::optional<DerivFactor> deriv;

    int monomial_degree() const;
    // derivative factor counts as one field power
    int total_degree() const { return monomial_degree() + (deriv ? 1 : 0); }
    int deriv_order() const { return deriv ? deriv->order : 0; }
    bool is_constant() const { return monomial.empty() && !deriv; }

    std::string name(const std::vector<std::string>& field_names) const;
    bool operator==(const TermDescriptor& o) const;
};

// Parse a canonical display name back into a descriptor.
TermDescriptor parse_term(const std::string& name, const std::vector<std::string>& field_names);

struct LibrarySpec {
    int d_max = 3;
    int r_max = 3;
    bool include_constant = true;
    std::vector<std::string> fields = {"u"};
    int spatial_axes = 1;
    std::vector<std::string> whitelist;  // optional explicit term selection
    int target_field = 0;                // field whose u_t is the regression target

    void validate() const;
};

// Deterministic, duplicate-free term list: constant, then ordered by total
// degree, derivative order, axis, then name. For a single field this counts
// 1 + d_max + r_max*(d_max+1) terms.
std::vector<TermDescriptor> enumerate_terms(const LibrarySpec& spec);

// Vectorized library Theta(u) plus the target u_t.
struct DesignMatrix {
    Eigen::MatrixXd X;   // real entries (empty when complex)
    Eigen::VectorXd y;
    Eigen::MatrixXcd Xc;  // complex entries (empty when real)
    Eigen::VectorXcd yc;
    bool complex_entries = false;

    std::vector<TermDescriptor> terms;
    std::vector<std::string> term_names;
    std::vector<long> row_index;  // original flat grid index per row
    long dropped_rows = 0;

    long rows() const { return complex_entries ? Xc.rows() : X.rows(); }
    long cols() const { return complex_entries ? Xc.cols() : X.cols(); }
    std::optional<int> constant_column() const;
};

// Hadamard-product column assembly from the derivative sets of each field in
// spec.fields (one DerivativeSet per field, same grids). Rows containing any
// non-finite entry are dropped and counted.
DesignMatrix assemble(const std::vector<DerivativeSet>& derivs, const LibrarySpec& spec);

// single-field convenience
DesignMatrix assemble(const DerivativeSet& derivs, const LibrarySpec& spec);

// Uniform sample of N rows without replacement; deterministic per seed.
DesignMatrix subsample_rows(const DesignMatrix& dm, long n, std::uint64_t seed);

// Real 2n x 2p expansion of a complex design matrix: per observation a
// (Re, Im) row pair, per term a (beta^R, beta^I) column pair with the block
// pattern ((x^R, x^I), (-x^I, x^R)); names suffixed ".re"/".im".
DesignMatrix complexify(const DesignMatrix& dm);

// CSV export: header = y plus term names, one row per observation.
void write_csv(const DesignMatrix& dm, const std::filesystem::path& path);

}  // namespace pdeid

#endif
