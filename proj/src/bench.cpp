// SPDX-License-Identifier: Apache-2.0
#include "pdeid/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace pdeid {

bool models_match(const SparseModel& model, const GroundTruth& truth) {
    if (truth.empty()) throw BenchError("models_match: empty ground truth");
    if (model.coefficients.size() != truth.terms.size()) return false;
    for (const auto& [name, coef] : truth.terms) {
        const auto got = model.coefficient(name);
        if (!got) return false;
        if ((coef > 0) != (*got > 0)) return false;  // sign must match
    }
    return true;
}

std::string category_name(ModelCategory c) {
    switch (c) {
        case ModelCategory::Null: return "null";
        case ModelCategory::ODE: return "ode";
        case ModelCategory::Transport: return "transport";
        case ModelCategory::Heat: return "heat";
        case ModelCategory::OtherParsimonious: return "other_parsimonious";
        case ModelCategory::NonParsimonious: return "non_parsimonious";
    }
    return "?";
}

namespace {

bool is_pure_monomial(const std::string& name) {
    if (name == "u") return true;
    if (name.rfind("u^", 0) != 0) return false;
    for (std::size_t i = 2; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    return name.size() > 2;
}

}  // namespace

ModelCategory classify_model(const SparseModel& model) {
    const std::size_t n = model.coefficients.size();
    if (n == 0) return ModelCategory::Null;
    if (n == 1) {
        const std::string& name = model.coefficients[0].first;
        if (is_pure_monomial(name)) return ModelCategory::ODE;
        if (name == "u_x") return ModelCategory::Transport;
        if (name == "u_xx") return ModelCategory::Heat;
    }
    return n <= 3 ? ModelCategory::OtherParsimonious : ModelCategory::NonParsimonious;
}

namespace {

// continued-fraction evaluation of the incomplete beta (modified Lentz)
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 3e-16, kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw BenchError("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                       b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

FTestResult f_test(const SparseModel& model, const DesignMatrix& dm) {
    if (dm.complex_entries) throw BenchError("f_test: complexify the design matrix first");
    FTestResult res;
    const long n = dm.rows();
    const long k = static_cast<long>(model.coefficients.size());
    if (k == 0) return res;  // null model: no regression to test
    if (n <= k + 1) throw BenchError("f_test: not enough rows for the test");

    std::vector<int> cols;
    for (const auto& [name, coef] : model.coefficients) {
        auto it = std::find(dm.term_names.begin(), dm.term_names.end(), name);
        if (it == dm.term_names.end()) throw BenchError("f_test: term not in design: " + name);
        cols.push_back(static_cast<int>(it - dm.term_names.begin()));
    }
    Eigen::MatrixXd Xa(n, k);
    for (long j = 0; j < k; ++j) Xa.col(j) = dm.X.col(cols[static_cast<std::size_t>(j)]);
    const OlsResult fit = ols(Xa, dm.y);
    const double rss1 = fit.rss;
    const double rss0 = (dm.y.array() - dm.y.mean()).square().sum();

    if (rss1 <= 1e-14 * std::max(1.0, rss0)) {
        res.exact_fit = true;
        res.p_value = 0.0;
        res.f_stat = std::numeric_limits<double>::infinity();
        res.significant = true;
        return res;
    }
    const double d1 = static_cast<double>(k);
    const double d2 = static_cast<double>(n - k - 1);
    double f = ((rss0 - rss1) / d1) / (rss1 / d2);
    if (f < 0.0) f = 0.0;
    res.f_stat = f;
    res.p_value = incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
    res.significant = res.p_value < 0.05;
    return res;
}

SparseModel identify_dm(const DesignMatrix& dm, const std::string& method, double d_tol,
                        RALTrace* trace) {
    if (method == "RAL" || method == "ral") {
        auto [model, tr] = recurrent_adaptive_lasso(dm);
        if (trace) *trace = std::move(tr);
        return model;
    }
    if (method == "STRidge" || method == "stridge")
        return stridge(dm, stridge_default_ridge(dm), d_tol);
    throw BenchError("unknown method: " + method);
}

SparseModel identify_field(const Field& field, const LibrarySpec& lib, const std::string& method,
                           double d_tol, RALTrace* trace, DesignMatrix* dm_out) {
    DerivativeSet ds = compute_derivatives(field, lib.r_max);
    DesignMatrix dm = assemble(ds, lib);
    if (dm.complex_entries) dm = complexify(dm);
    SparseModel model = identify_dm(dm, method, d_tol, trace);
    if (dm_out) *dm_out = std::move(dm);
    return model;
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw BenchError("experiment: trials must be >= 1");
    if (grid.empty()) throw BenchError("experiment: grid must be nonempty");
    if (sweep != "snr" && sweep != "samplesize" && sweep != "whitenoise")
        throw BenchError("experiment: unknown sweep type " + sweep);
    if (method != "RAL" && method != "STRidge" && method != "ral" && method != "stridge")
        throw BenchError("experiment: unknown method " + method);
    library.validate();
}

void parallel_for(long count, int jobs, const std::function<void(long)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t]() {
            for (long i = t; i < count; i += jobs) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

ResultTable run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable rt;
    rt.spec = spec;
    if (spec.sweep != "whitenoise") rt.truth = ground_truth(spec.system);

    const long g = static_cast<long>(spec.grid.size());
    rt.trials.resize(static_cast<std::size_t>(g * spec.trials));
    rt.success_count.assign(static_cast<std::size_t>(g), 0);
    rt.eta.assign(static_cast<std::size_t>(g), 0.0);

    parallel_for(g * spec.trials, spec.jobs, [&](long idx) {
        const int gi = static_cast<int>(idx / spec.trials);
        const int trial = static_cast<int>(idx % spec.trials);
        TrialRecord rec;
        rec.grid_index = gi;
        rec.trial = trial;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            DesignMatrix dm;
            GroundTruth truth;
            if (spec.sweep == "whitenoise") {
                SystemSpec ss = spec.system;
                ss.system = "whitenoise";
                ss.params["sigma"] = spec.grid[static_cast<std::size_t>(gi)];
                ss.seed = spec.base_seed + static_cast<std::uint64_t>(trial);
                const Field field = generate(ss).first;
                DerivativeSet ds = compute_derivatives(field, spec.library.r_max);
                dm = assemble(ds, spec.library);
            } else {
                TrialOptions opt;
                if (spec.sweep == "snr")
                    opt.snr_db = spec.grid[static_cast<std::size_t>(gi)];
                else
                    opt.sample_size = static_cast<long>(
                        std::llround(spec.grid[static_cast<std::size_t>(gi)]));
                std::tie(dm, truth) = make_trial(spec.system, opt, spec.library, trial,
                                                 spec.base_seed);
            }
            SparseModel model = identify_dm(dm, spec.method, spec.d_tol);
            rec.coefficients = model.coefficients;
            rec.classification = category_name(classify_model(model));
            if (!dm.complex_entries && model.n_active > 0 &&
                dm.rows() > model.n_active + 1) {
                const FTestResult ft = f_test(model, dm);
                rec.f_p_value = ft.p_value;
                rec.f_significant = ft.significant;
            }
            rec.success = !truth.empty() && models_match(model, truth);
        } catch (const std::exception& e) {
            rec.error = e.what();
            rec.success = false;
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rt.trials[static_cast<std::size_t>(idx)] = std::move(rec);
    });

    for (const auto& rec : rt.trials)
        if (rec.success) ++rt.success_count[static_cast<std::size_t>(rec.grid_index)];
    for (long i = 0; i < g; ++i)
        rt.eta[static_cast<std::size_t>(i)] =
            static_cast<double>(rt.success_count[static_cast<std::size_t>(i)]) / spec.trials;
    return rt;
}

namespace {

std::string csv_num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void ResultTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw BenchError("cannot open for writing: " + path.string());
    os << "# sweep=" << spec.sweep << " system=" << spec.system.system
       << " method=" << spec.method << " trials=" << spec.trials << " seed=" << spec.base_seed
       << "\n";
    os << "grid_value,trial,success,n_active,classification,f_p_value,f_significant,error,model\n";
    for (const auto& rec : trials) {
        os << csv_num(spec.grid[static_cast<std::size_t>(rec.grid_index)]) << "," << rec.trial
           << "," << (rec.success ? 1 : 0) << "," << rec.coefficients.size() << ","
           << rec.classification << "," << csv_num(rec.f_p_value) << ","
           << (rec.f_significant ? 1 : 0) << "," << rec.error << ",";
        for (std::size_t i = 0; i < rec.coefficients.size(); ++i) {
            if (i) os << " + ";
            os << csv_num(rec.coefficients[i].second) << "*" << rec.coefficients[i].first;
        }
        os << "\n";
    }
    os << "# summary\n";
    os << "grid_value,trials,successes,eta\n";
    for (std::size_t i = 0; i < eta.size(); ++i)
        os << csv_num(spec.grid[i]) << "," << spec.trials << "," << success_count[i] << ","
           << csv_num(eta[i]) << "\n";
}

void ResultTable::write_svg(const std::filesystem::path& path) const {
    const double W = 640, H = 420, ml = 60, mr = 20, mt = 30, mb = 50;
    const double pw = W - ml - mr, ph = H - mt - mb;
    const std::size_t g = eta.size();

    // x positions: evenly spaced grid indices, labels from grid values
    auto xpos = [&](std::size_t i) {
        return g == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / static_cast<double>(g - 1);
    };
    auto ypos = [&](double v) { return mt + ph * (1.0 - v); };

    std::ofstream os(path);
    if (!os) throw BenchError("cannot open for writing: " + path.string());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    // shaded >= 80% success band
    os << "<rect x=\"" << ml << "\" y=\"" << ypos(1.0) << "\" width=\"" << pw << "\" height=\""
       << ypos(0.8) - ypos(1.0) << "\" fill=\"#e8f0e8\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 5.0;
        os << "<text x=\"" << ml - 8 << "\" y=\"" << ypos(v) + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << csv_num(v) << "</text>\n";
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << ypos(v) << "\" x2=\"" << ml << "\" y2=\""
           << ypos(v) << "\" stroke=\"black\"/>\n";
    }
    for (std::size_t i = 0; i < g; ++i) {
        os << "<text x=\"" << xpos(i) << "\" y=\"" << mt + ph + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << csv_num(spec.grid[i])
           << "</text>\n";
    }
    const std::string xlabel = spec.sweep == "snr"
                                   ? "SNR (dB)"
                                   : (spec.sweep == "samplesize" ? "sample size N" : "sigma");
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12
       << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << mt + ph / 2
       << ")\">success rate</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << mt - 10
       << "\" font-size=\"13\" text-anchor=\"middle\">" << spec.system.system << " / "
       << spec.method << "</text>\n";

    os << "<polyline fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < g; ++i) os << xpos(i) << "," << ypos(eta[i]) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < g; ++i)
        os << "<circle cx=\"" << xpos(i) << "\" cy=\"" << ypos(eta[i])
           << "\" r=\"3.5\" fill=\"#1f4e8c\"/>\n";
    os << "</svg>\n";
}

WhitenoiseTable whitenoise_study(const std::vector<double>& sigmas,
                                 const std::vector<LibrarySpec>& libraries,
                                 const std::vector<std::string>& methods, int trials,
                                 std::uint64_t base_seed, bool desk, double d_tol, int jobs) {
    if (sigmas.empty() || libraries.empty() || methods.empty() || trials < 1)
        throw BenchError("whitenoise_study: empty configuration");

    // the Table-1 libraries are nested; assemble the largest once per trial
    // and slice columns for the smaller ones (bytewise identical to direct
    // assembly because columns are pointwise products)
    int max_r = 1, max_d = 1;
    for (const auto& lib : libraries) {
        max_r = std::max(max_r, lib.r_max);
        max_d = std::max(max_d, lib.d_max);
    }
    LibrarySpec big;
    big.d_max = max_d;
    big.r_max = max_r;

    WhitenoiseTable table;
    table.trials = trials;
    table.base_seed = base_seed;
    table.desk = desk;
    for (double s : sigmas)
        for (const auto& m : methods)
            for (const auto& lib : libraries) {
                WhitenoiseCell cell;
                cell.sigma = s;
                cell.method = m;
                cell.library = "d" + std::to_string(lib.d_max) + "r" + std::to_string(lib.r_max);
                cell.trials = trials;
                table.cells.push_back(cell);
            }

    std::mutex table_mutex;
    const long total = static_cast<long>(sigmas.size()) * trials;
    parallel_for(total, jobs, [&](long idx) {
        const std::size_t si = static_cast<std::size_t>(idx / trials);
        const int trial = static_cast<int>(idx % trials);

        SystemSpec ss;
        ss.system = "whitenoise";
        ss.params["sigma"] = sigmas[si];
        ss.seed = base_seed + static_cast<std::uint64_t>(trial);
        ss.desk = desk;
        auto [field, truth] = generate(ss);
        DerivativeSet ds = compute_derivatives(field, big.r_max);
        const DesignMatrix dm_big = assemble(ds, big);

        for (const auto& lib : libraries) {
            // column slice of the big library
            DesignMatrix dm;
            const std::vector<TermDescriptor> terms = enumerate_terms(lib);
            dm.terms = terms;
            for (const auto& td : terms) dm.term_names.push_back(td.name(lib.fields));
            dm.row_index = dm_big.row_index;
            dm.dropped_rows = dm_big.dropped_rows;
            dm.X.resize(dm_big.rows(), static_cast<long>(terms.size()));
            dm.y = dm_big.y;
            for (std::size_t j = 0; j < dm.term_names.size(); ++j) {
                auto it = std::find(dm_big.term_names.begin(), dm_big.term_names.end(),
                                    dm.term_names[j]);
                if (it == dm_big.term_names.end())
                    throw BenchError("whitenoise_study: libraries are not nested");
                dm.X.col(static_cast<long>(j)) =
                    dm_big.X.col(it - dm_big.term_names.begin());
            }

            for (const auto& method : methods) {
                SparseModel model = identify_dm(dm, method, d_tol);
                const ModelCategory cat = classify_model(model);
                bool significant = false;
                if (model.n_active > 0 && dm.rows() > model.n_active + 1)
                    significant = f_test(model, dm).significant;

                std::lock_guard<std::mutex> lock(table_mutex);
                for (auto& cell : table.cells) {
                    if (cell.sigma == sigmas[si] && cell.method == method &&
                        cell.library ==
                            "d" + std::to_string(lib.d_max) + "r" + std::to_string(lib.r_max)) {
                        ++cell.count[static_cast<std::size_t>(cat)];
                        if (significant) ++cell.significant[static_cast<std::size_t>(cat)];
                    }
                }
            }
        }
    });
    return table;
}

void WhitenoiseTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw BenchError("cannot open for writing: " + path.string());
    os << "sigma,method,library,trials";
    for (int c = 0; c < 6; ++c)
        os << "," << category_name(static_cast<ModelCategory>(c)) << "_pct,"
           << category_name(static_cast<ModelCategory>(c)) << "_sig";
    os << "\n";
    for (const auto& cell : cells) {
        os << csv_num(cell.sigma) << "," << cell.method << "," << cell.library << ","
           << cell.trials;
        for (int c = 0; c < 6; ++c) {
            const double pct =
                100.0 * cell.count[static_cast<std::size_t>(c)] / std::max(1, cell.trials);
            os << "," << csv_num(pct) << "," << cell.significant[static_cast<std::size_t>(c)];
        }
        os << "\n";
    }
}

}  // namespace pdeid
