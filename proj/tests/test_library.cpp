// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "pdeid/library.hpp"
#include "pdeid/rng.hpp"

using namespace pdeid;

namespace {

// derivative set with hand-authored fields (no smoothing involved)
DerivativeSet manual_set(const Field& u, const std::map<std::pair<int, int>, Field>& derivs) {
    DerivativeSet ds;
    ds.smoothed = u;
    ds.derivs = derivs;
    return ds;
}

Field field_of(long nx, long nt, const std::function<double(long, long)>& f) {
    std::vector<double> v(static_cast<std::size_t>(nx * nt));
    for (long t = 0; t < nt; ++t)
        for (long i = 0; i < nx; ++i) v[static_cast<std::size_t>(i + nx * t)] = f(i, t);
    return Field({nx, nt}, {0.1, 0.1}, {0.0, 0.0}, std::move(v));
}

}  // namespace

TEST_CASE("enumerate_terms: the 16-term payload library in order") {
    LibrarySpec spec;  // d_max = r_max = 3
    const auto terms = enumerate_terms(spec);
    std::vector<std::string> names;
    for (const auto& td : terms) names.push_back(td.name(spec.fields));
    const std::vector<std::string> expect = {
        "1",      "u",        "u_x",      "u_xx",     "u_xxx",    "u^2",
        "u*u_x",  "u*u_xx",   "u*u_xxx",  "u^3",      "u^2*u_x",  "u^2*u_xx",
        "u^2*u_xxx", "u^3*u_x", "u^3*u_xx", "u^3*u_xxx"};
    CHECK(names == expect);
}

TEST_CASE("enumerate_terms: smallest nontrivial spec") {
    LibrarySpec spec;
    spec.d_max = 1;
    spec.r_max = 1;
    spec.include_constant = false;
    const auto terms = enumerate_terms(spec);
    std::vector<std::string> names;
    for (const auto& td : terms) names.push_back(td.name(spec.fields));
    CHECK(names == std::vector<std::string>{"u", "u_x", "u*u_x"});
}

TEST_CASE("enumerate_terms: counts follow 1 + d + r(d+1) for a single field") {
    for (int d = 1; d <= 5; ++d)
        for (int r = 1; r <= 5; ++r) {
            LibrarySpec spec;
            spec.d_max = d;
            spec.r_max = r;
            const auto terms = enumerate_terms(spec);
            CHECK(static_cast<int>(terms.size()) == 1 + d + r * (d + 1));
        }
    LibrarySpec big;
    big.d_max = 5;
    big.r_max = 5;
    CHECK(enumerate_terms(big).size() == 36);
}

TEST_CASE("enumerate_terms is deterministic and duplicate-free") {
    LibrarySpec spec;
    spec.d_max = 4;
    spec.r_max = 2;
    spec.fields = {"u", "v"};
    spec.spatial_axes = 2;
    const auto a = enumerate_terms(spec);
    const auto b = enumerate_terms(spec);
    REQUIRE(a.size() == b.size());
    std::set<std::string> uniq;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        uniq.insert(a[i].name(spec.fields));
    }
    CHECK(uniq.size() == a.size());
}

TEST_CASE("enumerate_terms: multi-field fixture library size") {
    LibrarySpec spec;
    spec.d_max = 1;
    spec.r_max = 2;
    spec.fields = {"u", "v", "w"};
    spec.spatial_axes = 2;
    spec.target_field = 2;
    // constant + 3 monomials + (4 monomials of degree <= 1) x (3 fields x 2
    // axes x 2 orders)
    CHECK(enumerate_terms(spec).size() == 1 + 3 + 4 * 12);
}

TEST_CASE("term display names parse back to identical descriptors") {
    for (auto fields : std::vector<std::vector<std::string>>{{"u"}, {"u", "v", "w"}}) {
        LibrarySpec spec;
        spec.d_max = 3;
        spec.r_max = 3;
        spec.fields = fields;
        spec.spatial_axes = fields.size() > 1 ? 2 : 1;
        for (const auto& td : enumerate_terms(spec)) {
            const std::string name = td.name(spec.fields);
            CHECK(parse_term(name, spec.fields) == td);
        }
    }
    CHECK_THROWS_AS(parse_term("u_z", {"u"}), LibraryError);
    CHECK_THROWS_AS(parse_term("q", {"u"}), LibraryError);
    CHECK_THROWS_AS(parse_term("u_x*u_xx", {"u"}), LibraryError);
}

TEST_CASE("assemble: column values are pointwise Hadamard products") {
    const long nx = 6, nt = 4;
    Rng rng(2);
    Field u = field_of(nx, nt, [&](long, long) { return rng.normal(); });
    Field ux = field_of(nx, nt, [&](long, long) { return rng.normal(); });
    Field ut = field_of(nx, nt, [&](long, long) { return rng.normal(); });
    DerivativeSet ds = manual_set(u, {{{0, 1}, ux}, {{1, 1}, ut}});

    LibrarySpec spec;
    spec.d_max = 2;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);
    REQUIRE(dm.rows() == nx * nt);

    const auto col = [&](const std::string& name) {
        for (long j = 0; j < dm.cols(); ++j)
            if (dm.term_names[static_cast<std::size_t>(j)] == name) return j;
        FAIL("missing column ", name);
        return -1L;
    };
    for (long i = 0; i < dm.rows(); ++i) {
        CHECK(dm.X(i, col("1")) == 1.0);
        CHECK(dm.X(i, col("u")) == u.re()[static_cast<std::size_t>(i)]);
        // bitwise-reproducible product of the u and u_x columns
        CHECK(dm.X(i, col("u*u_x")) == dm.X(i, col("u")) * dm.X(i, col("u_x")));
        CHECK(dm.X(i, col("u^2")) ==
              u.re()[static_cast<std::size_t>(i)] * u.re()[static_cast<std::size_t>(i)]);
        CHECK(dm.y(i) == ut.re()[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("assemble: constant field squares to a constant column") {
    Field u = field_of(5, 3, [](long, long) { return 2.0; });
    Field zero = field_of(5, 3, [](long, long) { return 0.0; });
    DerivativeSet ds = manual_set(u, {{{0, 1}, zero}, {{1, 1}, zero}});
    LibrarySpec spec;
    spec.d_max = 2;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);
    for (long j = 0; j < dm.cols(); ++j)
        if (dm.term_names[static_cast<std::size_t>(j)] == "u^2")
            for (long i = 0; i < dm.rows(); ++i) CHECK(dm.X(i, j) == 4.0);
}

TEST_CASE("assemble drops non-finite rows and records them") {
    Field u = field_of(4, 3, [](long i, long t) { return 1.0 + i + t; });
    std::vector<double> bad = u.re();
    bad[5] = std::nan("");
    Field ux(u.shape(), u.spacing_all(), u.origin(), bad, /*raw_ingested=*/true);
    DerivativeSet ds = manual_set(u, {{{0, 1}, ux}, {{1, 1}, u}});
    LibrarySpec spec;
    spec.d_max = 1;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);
    CHECK(dm.dropped_rows == 1);
    CHECK(dm.rows() == 11);
    for (long r : dm.row_index) CHECK(r != 5);
}

TEST_CASE("assemble requires every requested derivative") {
    Field u = field_of(4, 3, [](long i, long t) { return 1.0 + i + t; });
    DerivativeSet ds = manual_set(u, {{{1, 1}, u}});  // no u_x
    LibrarySpec spec;
    spec.d_max = 1;
    spec.r_max = 1;
    CHECK_THROWS_AS(assemble(ds, spec), LibraryError);
}

TEST_CASE("subsample_rows: determinism, full sample, and the log grid rounding") {
    Field u = field_of(25, 20, [](long i, long t) { return std::sin(0.3 * i) + 0.01 * t; });
    DerivativeSet ds = manual_set(u, {{{0, 1}, u}, {{1, 1}, u}});
    LibrarySpec spec;
    spec.d_max = 2;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);

    DesignMatrix a = subsample_rows(dm, 100, 1);
    DesignMatrix b = subsample_rows(dm, 100, 1);
    CHECK(a.row_index == b.row_index);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);

    DesignMatrix c = subsample_rows(dm, 100, 2);
    CHECK(a.row_index != c.row_index);

    DesignMatrix full = subsample_rows(dm, dm.rows(), 7);
    std::vector<long> sorted = full.row_index;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == dm.row_index);

    CHECK(static_cast<long>(std::llround(std::pow(10.0, 2.2))) == 158);
    CHECK(subsample_rows(dm, 158, 3).rows() == 158);

    CHECK_THROWS_AS(subsample_rows(dm, 0, 1), LibraryError);
    CHECK_THROWS_AS(subsample_rows(dm, dm.rows() + 1, 1), LibraryError);
}

TEST_CASE("subsample commutes with assembly on the selected rows") {
    Field u = field_of(12, 9, [](long i, long t) { return 0.1 * i * i - 0.2 * t; });
    DerivativeSet ds = manual_set(u, {{{0, 1}, u}, {{1, 1}, u}});
    LibrarySpec spec;
    spec.d_max = 2;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);
    DesignMatrix sub = subsample_rows(dm, 30, 11);
    for (long r = 0; r < sub.rows(); ++r) {
        const long orig = sub.row_index[static_cast<std::size_t>(r)];
        for (long j = 0; j < sub.cols(); ++j) CHECK(sub.X(r, j) == dm.X(orig, j));
    }
}

TEST_CASE("complexify: the 1x1 system produces the [[c,-d],[d,c]] block") {
    const std::complex<double> x{3.0, -2.0};   // c + d i
    const std::complex<double> beta{0.5, 1.5};  // a + b i
    DesignMatrix dm;
    dm.complex_entries = true;
    dm.Xc.resize(1, 1);
    dm.Xc(0, 0) = x;
    dm.yc.resize(1);
    dm.yc(0) = x * beta;
    dm.terms.resize(1);
    dm.term_names = {"u"};
    dm.row_index = {0};

    DesignMatrix re = complexify(dm);
    REQUIRE(re.rows() == 2);
    REQUIRE(re.cols() == 2);
    CHECK(re.X(0, 0) == x.real());
    CHECK(re.X(0, 1) == -x.imag());
    CHECK(re.X(1, 0) == x.imag());
    CHECK(re.X(1, 1) == x.real());
    CHECK(re.term_names == std::vector<std::string>{"u.re", "u.im"});
    // the real system reproduces (Re beta, Im beta)
    Eigen::Vector2d b = re.X.colPivHouseholderQr().solve(re.y);
    CHECK(b(0) == doctest::Approx(beta.real()).epsilon(1e-14));
    CHECK(b(1) == doctest::Approx(beta.imag()).epsilon(1e-14));
}

TEST_CASE("complexify: purely real data has zero .im least-squares components") {
    Rng rng(4);
    DesignMatrix dm;
    dm.complex_entries = true;
    dm.Xc.resize(30, 3);
    dm.yc.resize(30);
    Eigen::VectorXd beta(3);
    beta << 1.5, -0.25, 0.75;
    for (long i = 0; i < 30; ++i) {
        for (long j = 0; j < 3; ++j) dm.Xc(i, j) = rng.normal();
        dm.yc(i) = 0.0;
        for (long j = 0; j < 3; ++j) dm.yc(i) += dm.Xc(i, j) * beta(j);
    }
    dm.terms.resize(3);
    dm.term_names = {"a", "b", "c"};
    dm.row_index.assign(30, 0);

    DesignMatrix re = complexify(dm);
    Eigen::VectorXd sol = re.X.colPivHouseholderQr().solve(re.y);
    for (long j = 0; j < 3; ++j) {
        CHECK(sol(2 * j) == doctest::Approx(beta(j)).epsilon(1e-12));
        CHECK(std::abs(sol(2 * j + 1)) < 1e-12);
    }
}

TEST_CASE("complexify preserves the complex least-squares solution and residual") {
    Rng rng(8);
    const long n = 20, p = 3;
    Eigen::MatrixXcd X(n, p);
    Eigen::VectorXcd y(n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < p; ++j) X(i, j) = std::complex<double>(rng.normal(), rng.normal());
        y(i) = std::complex<double>(rng.normal(), rng.normal());
    }
    // complex normal-equations oracle
    Eigen::VectorXcd beta_c = (X.adjoint() * X).ldlt().solve(X.adjoint() * y);
    const double resid_c = (y - X * beta_c).norm();

    DesignMatrix dm;
    dm.complex_entries = true;
    dm.Xc = X;
    dm.yc = y;
    dm.terms.resize(p);
    dm.term_names = {"a", "b", "c"};
    dm.row_index.assign(n, 0);
    DesignMatrix re = complexify(dm);
    Eigen::VectorXd sol = re.X.colPivHouseholderQr().solve(re.y);
    for (long j = 0; j < p; ++j) {
        CHECK(sol(2 * j) == doctest::Approx(beta_c(j).real()).epsilon(1e-10));
        CHECK(sol(2 * j + 1) == doctest::Approx(beta_c(j).imag()).epsilon(1e-10));
    }
    CHECK((re.y - re.X * sol).norm() == doctest::Approx(resid_c).epsilon(1e-10));

    CHECK_THROWS_AS(complexify(re), LibraryError);
}

TEST_CASE("design matrix CSV export") {
    Field u = field_of(3, 2, [](long i, long t) { return 1.0 + i + 10.0 * t; });
    DerivativeSet ds = manual_set(u, {{{0, 1}, u}, {{1, 1}, u}});
    LibrarySpec spec;
    spec.d_max = 1;
    spec.r_max = 1;
    DesignMatrix dm = assemble(ds, spec);
    const auto path = std::filesystem::temp_directory_path() / "dm_test.csv";
    write_csv(dm, path);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "u_t,1,u,u_x,u*u_x");
    long rows = 0;
    std::string line;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == dm.rows());
    std::filesystem::remove(path);
}

TEST_CASE("library spec validation") {
    LibrarySpec bad;
    bad.d_max = 0;
    CHECK_THROWS_AS(bad.validate(), LibraryError);
    LibrarySpec dup;
    dup.fields = {"u", "u"};
    CHECK_THROWS_AS(dup.validate(), LibraryError);
    LibrarySpec uscore;
    uscore.fields = {"u_1"};
    CHECK_THROWS_AS(uscore.validate(), LibraryError);
}
