// SPDX-License-Identifier: Apache-2.0
#include "pdeid/library.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "pdeid/rng.hpp"

namespace pdeid {

int TermDescriptor::monomial_degree() const {
    int d = 0;
    for (const auto& [f, deg] : monomial) d += deg;
    return d;
}

std::string TermDescriptor::name(const std::vector<std::string>& field_names) const {
    if (is_constant()) return "1";
    std::string out;
    for (const auto& [f, deg] : monomial) {
        if (!out.empty()) out += "*";
        out += field_names.at(static_cast<std::size_t>(f));
        if (deg > 1) out += "^" + std::to_string(deg);
    }
    if (deriv) {
        if (!out.empty()) out += "*";
        out += field_names.at(static_cast<std::size_t>(deriv->field)) + "_";
        out += std::string(static_cast<std::size_t>(deriv->order), deriv->axis == 0 ? 'x' : 'y');
    }
    return out;
}

bool TermDescriptor::operator==(const TermDescriptor& o) const {
    if (monomial != o.monomial) return false;
    if (deriv.has_value() != o.deriv.has_value()) return false;
    if (deriv && (deriv->field != o.deriv->field || deriv->axis != o.deriv->axis ||
                  deriv->order != o.deriv->order))
        return false;
    return true;
}

namespace {

int field_id_of(const std::string& token, const std::vector<std::string>& field_names) {
    for (std::size_t i = 0; i < field_names.size(); ++i)
        if (field_names[i] == token) return static_cast<int>(i);
    throw LibraryError("unknown field in term name: " + token);
}

}  // namespace

TermDescriptor parse_term(const std::string& name, const std::vector<std::string>& field_names) {
    TermDescriptor td;
    if (name == "1") return td;
    std::size_t pos = 0;
    while (pos < name.size()) {
        std::size_t star = name.find('*', pos);
        const std::string tok = name.substr(pos, star == std::string::npos ? star : star - pos);
        pos = star == std::string::npos ? name.size() : star + 1;
        if (tok.empty()) throw LibraryError("malformed term name: " + name);

        const std::size_t us = tok.find('_');
        if (us != std::string::npos) {
            // derivative factor, e.g. u_xx
            if (td.deriv) throw LibraryError("term has two derivative factors: " + name);
            const std::string suffix = tok.substr(us + 1);
            if (suffix.empty()) throw LibraryError("malformed derivative suffix: " + name);
            const char ax = suffix[0];
            if ((ax != 'x' && ax != 'y') ||
                suffix.find_first_not_of(ax) != std::string::npos)
                throw LibraryError("malformed derivative suffix: " + name);
            TermDescriptor::DerivFactor df;
            df.field = field_id_of(tok.substr(0, us), field_names);
            df.axis = ax == 'x' ? 0 : 1;
            df.order = static_cast<int>(suffix.size());
            td.deriv = df;
        } else {
            const std::size_t caret = tok.find('^');
            const std::string base = tok.substr(0, caret);
            int deg = 1;
            if (caret != std::string::npos) deg = std::stoi(tok.substr(caret + 1));
            if (deg < 1) throw LibraryError("monomial degree must be >= 1: " + name);
            const int fid = field_id_of(base, field_names);
            for (const auto& [f, d] : td.monomial)
                if (f == fid) throw LibraryError("repeated field in monomial: " + name);
            td.monomial.emplace_back(fid, deg);
        }
    }
    std::sort(td.monomial.begin(), td.monomial.end());
    return td;
}

void LibrarySpec::validate() const {
    if (d_max < 1 || d_max > 5) throw LibraryError("d_max must be in [1, 5]");
    if (r_max < 1 || r_max > 5) throw LibraryError("r_max must be in [1, 5]");
    if (fields.empty()) throw LibraryError("at least one field required");
    if (spatial_axes != 1 && spatial_axes != 2) throw LibraryError("spatial_axes must be 1 or 2");
    if (target_field < 0 || target_field >= static_cast<int>(fields.size()))
        throw LibraryError("target_field out of range");
    std::set<std::string> uniq(fields.begin(), fields.end());
    if (uniq.size() != fields.size()) throw LibraryError("duplicate field names");
    for (const auto& f : fields) {
        if (f.empty() || f == "1" || f.find_first_of("*^_ \t") != std::string::npos)
            throw LibraryError("invalid field name: " + f);
    }
}

std::vector<TermDescriptor> enumerate_terms(const LibrarySpec& spec) {
    spec.validate();
    const int nf = static_cast<int>(spec.fields.size());

    // all monomials with total degree in [0, d_max]
    std::vector<std::vector<std::pair<int, int>>> monomials;
    std::vector<std::pair<int, int>> cur;
    auto rec = [&](auto&& self, int field, int remaining) -> void {
        if (field == nf) {
            monomials.push_back(cur);
            return;
        }
        self(self, field + 1, remaining);
        for (int d = 1; d <= remaining; ++d) {
            cur.emplace_back(field, d);
            self(self, field + 1, remaining - d);
            cur.pop_back();
        }
    };
    rec(rec, 0, spec.d_max);

    std::vector<TermDescriptor> terms;
    for (const auto& m : monomials) {
        // plain monomial (degree >= 1); the constant handled separately
        if (!m.empty()) {
            TermDescriptor td;
            td.monomial = m;
            terms.push_back(td);
        }
        // monomial times one derivative factor
        for (int f = 0; f < nf; ++f)
            for (int ax = 0; ax < spec.spatial_axes; ++ax)
                for (int r = 1; r <= spec.r_max; ++r) {
                    TermDescriptor td;
                    td.monomial = m;
                    td.deriv = TermDescriptor::DerivFactor{f, ax, r};
                    terms.push_back(td);
                }
    }

    std::sort(terms.begin(), terms.end(), [&](const TermDescriptor& a, const TermDescriptor& b) {
        if (a.total_degree() != b.total_degree()) return a.total_degree() < b.total_degree();
        if (a.deriv_order() != b.deriv_order()) return a.deriv_order() < b.deriv_order();
        const int ax_a = a.deriv ? a.deriv->axis : -1;
        const int ax_b = b.deriv ? b.deriv->axis : -1;
        if (ax_a != ax_b) return ax_a < ax_b;
        return a.name(spec.fields) < b.name(spec.fields);
    });

    std::vector<TermDescriptor> out;
    if (spec.include_constant) out.push_back(TermDescriptor{});
    out.insert(out.end(), terms.begin(), terms.end());

    if (!spec.whitelist.empty()) {
        std::vector<TermDescriptor> filtered;
        for (const auto& td : out) {
            const std::string n = td.name(spec.fields);
            if (std::find(spec.whitelist.begin(), spec.whitelist.end(), n) != spec.whitelist.end())
                filtered.push_back(td);
        }
        out = std::move(filtered);
    }
    return out;
}

std::optional<int> DesignMatrix::constant_column() const {
    for (std::size_t j = 0; j < term_names.size(); ++j)
        if (term_names[j] == "1") return static_cast<int>(j);
    return std::nullopt;
}

namespace {

template <class Scalar>
void fill_column(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& col, const TermDescriptor& td,
                 const std::vector<DerivativeSet>& derivs, long n) {
    col.setOnes(n);
    for (const auto& [f, deg] : td.monomial) {
        const Field& u = derivs[static_cast<std::size_t>(f)].smoothed;
        for (long i = 0; i < n; ++i) {
            Scalar v;
            if constexpr (std::is_same_v<Scalar, double>)
                v = u.re()[static_cast<std::size_t>(i)];
            else
                v = u.cval(i);
            Scalar p = v;
            for (int d = 1; d < deg; ++d) p *= v;
            col(i) *= p;
        }
    }
    if (td.deriv) {
        const Field& du =
            derivs[static_cast<std::size_t>(td.deriv->field)].deriv(td.deriv->axis, td.deriv->order);
        for (long i = 0; i < n; ++i) {
            if constexpr (std::is_same_v<Scalar, double>)
                col(i) *= du.re()[static_cast<std::size_t>(i)];
            else
                col(i) *= du.cval(i);
        }
    }
}

}  // namespace

DesignMatrix assemble(const std::vector<DerivativeSet>& derivs, const LibrarySpec& spec) {
    spec.validate();
    if (derivs.size() != spec.fields.size())
        throw LibraryError("assemble: one DerivativeSet per field required");
    for (const auto& ds : derivs)
        if (!ds.smoothed.same_grid(derivs[0].smoothed))
            throw LibraryError("assemble: fields live on different grids");

    const Field& target = derivs[static_cast<std::size_t>(spec.target_field)].smoothed;
    const int t_axis = target.time_axis();
    if (!derivs[static_cast<std::size_t>(spec.target_field)].has(t_axis, 1))
        throw LibraryError("assemble: target time derivative missing");

    DesignMatrix dm;
    dm.terms = enumerate_terms(spec);
    for (const auto& td : dm.terms) dm.term_names.push_back(td.name(spec.fields));
    for (const auto& td : dm.terms) {
        if (td.deriv && !derivs[static_cast<std::size_t>(td.deriv->field)].has(td.deriv->axis,
                                                                               td.deriv->order))
            throw LibraryError("assemble: derivative missing for term " + td.name(spec.fields));
    }

    const long n = target.size();
    const long p = static_cast<long>(dm.terms.size());
    const bool cplx = target.is_complex();
    dm.complex_entries = cplx;

    const Field& ut = derivs[static_cast<std::size_t>(spec.target_field)].deriv(t_axis, 1);

    if (cplx) {
        dm.Xc.resize(n, p);
        for (long j = 0; j < p; ++j) {
            Eigen::VectorXcd col;
            fill_column(col, dm.terms[static_cast<std::size_t>(j)], derivs, n);
            dm.Xc.col(j) = col;
        }
        dm.yc.resize(n);
        for (long i = 0; i < n; ++i) dm.yc(i) = ut.cval(i);
    } else {
        dm.X.resize(n, p);
        for (long j = 0; j < p; ++j) {
            Eigen::VectorXd col;
            fill_column(col, dm.terms[static_cast<std::size_t>(j)], derivs, n);
            dm.X.col(j) = col;
        }
        dm.y.resize(n);
        for (long i = 0; i < n; ++i) dm.y(i) = ut.re()[static_cast<std::size_t>(i)];
    }

    // drop rows with non-finite entries (masked regions in ingested data)
    std::vector<long> keep;
    keep.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        bool ok;
        if (cplx) {
            ok = std::isfinite(dm.yc(i).real()) && std::isfinite(dm.yc(i).imag());
            for (long j = 0; ok && j < p; ++j)
                ok = std::isfinite(dm.Xc(i, j).real()) && std::isfinite(dm.Xc(i, j).imag());
        } else {
            ok = std::isfinite(dm.y(i));
            for (long j = 0; ok && j < p; ++j) ok = std::isfinite(dm.X(i, j));
        }
        if (ok) keep.push_back(i);
    }
    dm.dropped_rows = n - static_cast<long>(keep.size());
    if (keep.empty()) throw LibraryError("assemble: no finite rows left");
    if (dm.dropped_rows > 0) {
        if (cplx) {
            Eigen::MatrixXcd Xf(static_cast<long>(keep.size()), p);
            Eigen::VectorXcd yf(static_cast<long>(keep.size()));
            for (std::size_t r = 0; r < keep.size(); ++r) {
                Xf.row(static_cast<long>(r)) = dm.Xc.row(keep[r]);
                yf(static_cast<long>(r)) = dm.yc(keep[r]);
            }
            dm.Xc = std::move(Xf);
            dm.yc = std::move(yf);
        } else {
            Eigen::MatrixXd Xf(static_cast<long>(keep.size()), p);
            Eigen::VectorXd yf(static_cast<long>(keep.size()));
            for (std::size_t r = 0; r < keep.size(); ++r) {
                Xf.row(static_cast<long>(r)) = dm.X.row(keep[r]);
                yf(static_cast<long>(r)) = dm.y(keep[r]);
            }
            dm.X = std::move(Xf);
            dm.y = std::move(yf);
        }
    }
    dm.row_index = std::move(keep);
    return dm;
}

DesignMatrix assemble(const DerivativeSet& derivs, const LibrarySpec& spec) {
    std::vector<DerivativeSet> v;
    v.push_back(derivs);
    return assemble(v, spec);
}

DesignMatrix subsample_rows(const DesignMatrix& dm, long n, std::uint64_t seed) {
    const long rows = dm.rows();
    if (n < 1 || n > rows) throw LibraryError("subsample_rows: N out of range");
    Rng rng(seed);
    std::vector<long> pick = rng.sample_without_replacement(rows, n);

    DesignMatrix out;
    out.terms = dm.terms;
    out.term_names = dm.term_names;
    out.complex_entries = dm.complex_entries;
    out.dropped_rows = dm.dropped_rows;
    out.row_index.reserve(static_cast<std::size_t>(n));
    for (long r : pick) out.row_index.push_back(dm.row_index[static_cast<std::size_t>(r)]);
    if (dm.complex_entries) {
        out.Xc.resize(n, dm.cols());
        out.yc.resize(n);
        for (long r = 0; r < n; ++r) {
            out.Xc.row(r) = dm.Xc.row(pick[static_cast<std::size_t>(r)]);
            out.yc(r) = dm.yc(pick[static_cast<std::size_t>(r)]);
        }
    } else {
        out.X.resize(n, dm.cols());
        out.y.resize(n);
        for (long r = 0; r < n; ++r) {
            out.X.row(r) = dm.X.row(pick[static_cast<std::size_t>(r)]);
            out.y(r) = dm.y(pick[static_cast<std::size_t>(r)]);
        }
    }
    return out;
}

DesignMatrix complexify(const DesignMatrix& dm) {
    if (!dm.complex_entries) throw LibraryError("complexify: input already real");
    const long n = dm.Xc.rows(), p = dm.Xc.cols();

    DesignMatrix out;
    out.complex_entries = false;
    out.dropped_rows = dm.dropped_rows;
    out.X.resize(2 * n, 2 * p);
    out.y.resize(2 * n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < p; ++j) {
            const double xr = dm.Xc(i, j).real(), xi = dm.Xc(i, j).imag();
            out.X(2 * i, 2 * j) = xr;
            out.X(2 * i, 2 * j + 1) = -xi;
            out.X(2 * i + 1, 2 * j) = xi;
            out.X(2 * i + 1, 2 * j + 1) = xr;
        }
        out.y(2 * i) = dm.yc(i).real();
        out.y(2 * i + 1) = dm.yc(i).imag();
    }
    out.terms.reserve(static_cast<std::size_t>(2 * p));
    out.term_names.reserve(static_cast<std::size_t>(2 * p));
    for (long j = 0; j < p; ++j) {
        out.terms.push_back(dm.terms[static_cast<std::size_t>(j)]);
        out.terms.push_back(dm.terms[static_cast<std::size_t>(j)]);
        out.term_names.push_back(dm.term_names[static_cast<std::size_t>(j)] + ".re");
        out.term_names.push_back(dm.term_names[static_cast<std::size_t>(j)] + ".im");
    }
    out.row_index.reserve(static_cast<std::size_t>(2 * n));
    for (long i = 0; i < n; ++i) {
        out.row_index.push_back(dm.row_index[static_cast<std::size_t>(i)]);
        out.row_index.push_back(dm.row_index[static_cast<std::size_t>(i)]);
    }
    return out;
}

void write_csv(const DesignMatrix& dm, const std::filesystem::path& path) {
    if (dm.complex_entries)
        throw LibraryError("write_csv: complexify the matrix first");
    std::ofstream os(path);
    if (!os) throw LibraryError("cannot open for writing: " + path.string());
    os << "u_t";
    for (const auto& n : dm.term_names) os << "," << n;
    os << "\n";
    char buf[64];
    for (long i = 0; i < dm.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", dm.y(i));
        os << buf;
        for (long j = 0; j < dm.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", dm.X(i, j));
            os << "," << buf;
        }
        os << "\n";
    }
}

}  // namespace pdeid
