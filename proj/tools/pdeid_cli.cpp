// SPDX-License-Identifier: Apache-2.0
//
// pdeid — identify the governing PDE of a gridded spatiotemporal dataset.
// Subcommands: generate | identify | bench | differentiate.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdeid/bench.hpp"
#include "pdeid/datagen.hpp"
#include "pdeid/field.hpp"
#include "pdeid/library.hpp"
#include "pdeid/regress.hpp"
#include "pdeid/smoothdiff.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string format_model(const pdeid::SparseModel& model) {
    if (model.coefficients.empty()) return "u_t = 0 (null model)";
    std::string out = "u_t = ";
    for (std::size_t i = 0; i < model.coefficients.size(); ++i) {
        if (i) out += " + ";
        out += fmt4(model.coefficients[i].second) + "*" + model.coefficients[i].first;
    }
    return out;
}

void write_manifest(const CLI::App& app, const std::string& subcommand,
                    const std::filesystem::path& path) {
    json m;
    m["tool"] = "pdeid";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["config_ini"] = app.config_to_str(true, false);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write manifest: " + path.string());
    os << m.dump(2) << "\n";
}

void write_truth(const pdeid::GroundTruth& truth, const std::filesystem::path& path) {
    json t;
    t["terms"] = json::object();
    for (const auto& [name, coef] : truth.terms) t["terms"][name] = coef;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write truth sidecar: " + path.string());
    os << t.dump(2) << "\n";
}

std::vector<double> parse_grid(const std::string& text, const std::string& sweep) {
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        // log-spaced range lo:hi[:decade_step], samplesize style
        double lo = 0, hi = 0, step = 0.2;
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 + 1);
        lo = std::stod(text.substr(0, c1));
        hi = std::stod(text.substr(c1 + 1, c2 == std::string::npos ? c2 : c2 - c1 - 1));
        if (c2 != std::string::npos) step = std::stod(text.substr(c2 + 1));
        const double llo = std::log10(lo), lhi = std::log10(hi);
        for (double e = llo; e < lhi + 1e-9; e += step)
            grid.push_back(sweep == "samplesize" ? std::round(std::pow(10.0, e))
                                                 : std::pow(10.0, e));
        return grid;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "inf" || tok == "+inf")
            grid.push_back(std::numeric_limits<double>::infinity());
        else
            grid.push_back(std::stod(tok));
    }
    return grid;
}

struct GenerateOpts {
    std::string system;
    std::string out = "field.fld";
    double sigma = 1.0;
    std::uint64_t seed = 0;
    bool desk = false;
    std::vector<std::string> params;  // key=value physical-constant overrides
};

int cmd_generate(const CLI::App& app, const GenerateOpts& o) {
    pdeid::SystemSpec spec;
    spec.system = o.system;
    spec.seed = o.seed;
    spec.desk = o.desk;
    spec.params["sigma"] = o.sigma;
    for (const auto& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--param needs key=value");
        spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    auto [field, truth] = pdeid::generate(spec);
    const std::filesystem::path out(o.out);
    pdeid::field_write(field, out);

    std::filesystem::path truth_path = out;
    truth_path.replace_extension(".truth.json");
    write_truth(truth, truth_path);
    std::filesystem::path manifest = out;
    manifest.replace_extension(".manifest.json");
    write_manifest(app, "generate", manifest);

    std::cout << "wrote " << out.string() << " (";
    for (std::size_t a = 0; a < field.shape().size(); ++a)
        std::cout << (a ? "x" : "") << field.shape()[a];
    std::cout << ", " << (field.is_complex() ? "complex" : "real") << ")\n";
    if (truth.empty()) {
        std::cout << "ground truth: none (noise dataset)\n";
    } else {
        std::cout << "ground truth: u_t =";
        for (std::size_t i = 0; i < truth.terms.size(); ++i)
            std::cout << (i ? " + " : " ") << fmt4(truth.terms[i].second) << "*"
                      << truth.terms[i].first;
        std::cout << "\n";
    }
    return 0;
}

struct IdentifyOpts {
    std::string input;
    std::string method = "ral";
    double d_tol = 2.0;
    int d_max = 3;
    int r_max = 3;
    bool no_constant = false;
    std::string out;
    bool trace = false;
};

int cmd_identify(const CLI::App& app, const IdentifyOpts& o) {
    const pdeid::Field field = pdeid::field_read(o.input);
    pdeid::LibrarySpec lib;
    lib.d_max = o.d_max;
    lib.r_max = o.r_max;
    lib.include_constant = !o.no_constant;
    lib.spatial_axes = field.spatial_dims();

    pdeid::RALTrace trace;
    pdeid::SparseModel model =
        pdeid::identify_field(field, lib, o.method == "stridge" ? "STRidge" : "RAL", o.d_tol,
                              &trace);

    std::filesystem::path out = o.out.empty()
                                    ? std::filesystem::path(o.input).replace_extension(".model.json")
                                    : std::filesystem::path(o.out);
    pdeid::write_model(model, out, o.trace && model.method == "RAL" ? &trace : nullptr);
    std::filesystem::path manifest = out;
    manifest.replace_extension(".manifest.json");
    write_manifest(app, "identify", manifest);

    if (model.null_model) {
        std::cerr << "null model: no active terms identified\n";
        return 1;
    }
    std::cout << format_model(model) << "\n";
    std::cout << "method=" << model.method << " n_active=" << model.n_active
              << " rss=" << model.rss << " aic=" << model.aic_value << "\n";
    return 0;
}

struct DifferentiateOpts {
    std::string input;
    int max_order = 3;
    std::string prefix = "deriv";
};

int cmd_differentiate(const CLI::App& app, const DifferentiateOpts& o) {
    const pdeid::Field field = pdeid::field_read(o.input);
    const pdeid::DerivativeSet ds = pdeid::compute_derivatives(field, o.max_order);

    auto path_for = [&](const std::string& tag) {
        return std::filesystem::path(o.prefix + "." + tag + ".fld");
    };
    pdeid::field_write(ds.smoothed, path_for("u"));
    std::cout << "wrote " << path_for("u").string() << "\n";
    for (const auto& [key, df] : ds.derivs) {
        const auto [axis, order] = key;
        std::string tag = "u_";
        const char c = axis == field.time_axis() ? 't' : (axis == 0 ? 'x' : 'y');
        for (int i = 0; i < order; ++i) tag += c;
        pdeid::field_write(df, path_for(tag));
        std::cout << "wrote " << path_for(tag).string() << "\n";
    }
    for (int a = 0; a < field.num_axes(); ++a)
        std::cout << "axis " << a << ": tuned order=" << ds.tuning[static_cast<std::size_t>(a)].order
                  << " window=" << ds.tuning[static_cast<std::size_t>(a)].window << "\n";
    for (const auto& note : ds.notes) std::cout << "note: " << note << "\n";
    write_manifest(app, "differentiate", std::filesystem::path(o.prefix + ".manifest.json"));
    return 0;
}

struct BenchOpts {
    std::string sweep = "snr";
    std::string system = "burgers";
    std::string method = "ral";
    double d_tol = 2.0;
    int trials = 10;
    std::uint64_t seed = 0;
    std::string grid;
    std::vector<double> sigmas;
    int d_max = 3;
    int r_max = 3;
    bool full = false;
    bool desk = false;  // whitenoise reduced grid
    int jobs = 1;
    std::string prefix = "bench";
};

int cmd_bench(const CLI::App& app, const BenchOpts& o) {
    const std::string method = o.method == "stridge" ? "STRidge" : "RAL";

    if (o.sweep == "whitenoise") {
        std::vector<double> sigmas = o.sigmas;
        if (sigmas.empty()) sigmas = {0.1, 1.0, 10.0};
        std::vector<pdeid::LibrarySpec> libs;
        for (int d : {3, 4, 5}) {
            pdeid::LibrarySpec lib;
            lib.d_max = d;
            lib.r_max = d;
            libs.push_back(lib);
        }
        const pdeid::WhitenoiseTable table = pdeid::whitenoise_study(
            sigmas, libs, {method}, o.trials, o.seed, o.desk || !o.full, o.d_tol, o.jobs);
        table.write_csv(o.prefix + ".csv");
        write_manifest(app, "bench", o.prefix + ".manifest.json");
        std::cout << "sigma method library non_parsimonious_pct\n";
        for (const auto& cell : table.cells)
            std::cout << cell.sigma << " " << cell.method << " " << cell.library << " "
                      << 100.0 * cell.count[5] / std::max(1, cell.trials) << "\n";
        return 0;
    }

    pdeid::ExperimentSpec spec;
    spec.system.system = o.system;
    spec.method = method;
    spec.d_tol = o.d_tol;
    spec.sweep = o.sweep;
    spec.trials = o.trials;
    spec.base_seed = o.seed;
    spec.jobs = o.jobs;
    spec.library.d_max = o.d_max;
    spec.library.r_max = o.r_max;

    if (!o.grid.empty()) {
        spec.grid = parse_grid(o.grid, o.sweep);
    } else if (o.sweep == "snr") {
        if (o.full) {
            for (int s = 0; s <= 60; s += 2) spec.grid.push_back(s);
            spec.grid.push_back(std::numeric_limits<double>::infinity());
        } else {
            spec.grid = {0, 10, 20, 30, 40, 60, std::numeric_limits<double>::infinity()};
        }
    } else {
        spec.grid = parse_grid(o.full ? "1e2:1e5" : "1e2:1e4", o.sweep);
    }

    const pdeid::ResultTable table = pdeid::run_sweep(spec);
    table.write_csv(o.prefix + ".csv");
    table.write_svg(o.prefix + ".svg");
    write_manifest(app, "bench", o.prefix + ".manifest.json");

    std::cout << "grid_value eta\n";
    for (std::size_t i = 0; i < table.eta.size(); ++i)
        std::cout << spec.grid[i] << " " << table.eta[i] << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pdeid: data-driven identification of governing PDEs"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config")->configurable(false);
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* sc_gen = app.add_subcommand("generate", "generate a benchmark dataset as an FLD1 file");
    sc_gen->add_option("--system", gen.system, "system id")
        ->required()
        ->check(CLI::IsMember(pdeid::known_systems()));
    sc_gen->add_option("--out", gen.out, "output FLD1 path");
    sc_gen->add_option("--sigma", gen.sigma, "whitenoise standard deviation");
    sc_gen->add_option("--seed", gen.seed, "seed for stochastic systems");
    sc_gen->add_flag("--desk", gen.desk, "reduced whitenoise grid (500x250)");
    sc_gen->add_option("--param", gen.params, "physical constant override key=value");

    IdentifyOpts idn;
    auto* sc_idn = app.add_subcommand("identify", "identify the governing PDE of a dataset");
    sc_idn->add_option("input", idn.input, "input FLD1 file")->required();
    sc_idn->add_option("--method", idn.method, "ral | stridge")
        ->check(CLI::IsMember({"ral", "stridge"}));
    sc_idn->add_option("--dtol", idn.d_tol, "STRidge threshold");
    sc_idn->add_option("--dmax", idn.d_max, "max monomial degree")->check(CLI::Range(1, 5));
    sc_idn->add_option("--rmax", idn.r_max, "max derivative order")->check(CLI::Range(1, 5));
    sc_idn->add_flag("--no-constant", idn.no_constant, "drop the constant library term");
    sc_idn->add_option("--out", idn.out, "model JSON path");
    sc_idn->add_flag("--trace", idn.trace, "include the RAL trace in the model JSON");

    DifferentiateOpts dif;
    auto* sc_dif = app.add_subcommand("differentiate", "dump the smoothed field and derivatives");
    sc_dif->add_option("input", dif.input, "input FLD1 file")->required();
    sc_dif->add_option("--max-order", dif.max_order, "max spatial derivative order")
        ->check(CLI::Range(1, 5));
    sc_dif->add_option("--out-prefix", dif.prefix, "output file prefix");

    BenchOpts ben;
    auto* sc_ben = app.add_subcommand("bench", "run a success-rate sweep or noise study");
    sc_ben->add_option("--sweep", ben.sweep, "snr | samplesize | whitenoise")
        ->check(CLI::IsMember({"snr", "samplesize", "whitenoise"}));
    sc_ben->add_option("--system", ben.system, "system id")
        ->check(CLI::IsMember(pdeid::known_systems()));
    sc_ben->add_option("--method", ben.method, "ral | stridge")
        ->check(CLI::IsMember({"ral", "stridge"}));
    sc_ben->add_option("--dtol", ben.d_tol, "STRidge threshold");
    sc_ben->add_option("--trials", ben.trials, "trials per grid point")->check(CLI::Range(1, 1000));
    sc_ben->add_option("--seed", ben.seed, "base seed");
    sc_ben->add_option("--grid", ben.grid, "comma list (snr) or lo:hi[:step] log range (samplesize)");
    sc_ben->add_option("--sigma", ben.sigmas, "whitenoise sigma values");
    sc_ben->add_option("--dmax", ben.d_max, "library monomial degree")->check(CLI::Range(1, 5));
    sc_ben->add_option("--rmax", ben.r_max, "library derivative order")->check(CLI::Range(1, 5));
    sc_ben->add_flag("--full-grid", ben.full, "paper-scale grids instead of desk scale");
    sc_ben->add_flag("--desk", ben.desk, "desk-scale whitenoise grid (500x250)");
    sc_ben->add_option("--jobs", ben.jobs, "parallel trial workers")->check(CLI::Range(1, 256));
    sc_ben->add_option("--out-prefix", ben.prefix, "output prefix for CSV/SVG/manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (*sc_gen) return cmd_generate(app, gen);
        if (*sc_idn) return cmd_identify(app, idn);
        if (*sc_dif) return cmd_differentiate(app, dif);
        if (*sc_ben) return cmd_bench(app, ben);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
