// SPDX-License-Identifier: Apache-2.0
#include "pdeid/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>

#include "pdeid/fft.hpp"
#include "pdeid/rng.hpp"
#include "pdeid/smoothdiff.hpp"

namespace pdeid {

namespace {

using cvec = std::vector<std::complex<double>>;

// spectral first/second/third derivative of a real periodic sample vector
struct SpectralDiff {
    std::vector<double> k;
    explicit SpectralDiff(long n, double dx) : k(fft_wavenumbers(n, dx)) {}

    std::vector<double> deriv(const std::vector<double>& u, int order) const {
        const long n = static_cast<long>(u.size());
        cvec uh(u.size());
        for (long i = 0; i < n; ++i) uh[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)];
        uh = fft(uh);
        for (long i = 0; i < n; ++i) {
            std::complex<double> f;
            const double ki = k[static_cast<std::size_t>(i)];
            switch (order) {
                case 1: f = {0.0, ki}; break;
                case 2: f = {-ki * ki, 0.0}; break;
                case 3: f = {0.0, -ki * ki * ki}; break;
                default: throw DatagenError("spectral derivative order not supported");
            }
            // odd derivatives of real data: zero the unpaired Nyquist mode
            if (order % 2 == 1 && n % 2 == 0 && i == n / 2) f = 0.0;
            uh[static_cast<std::size_t>(i)] *= f;
        }
        const cvec out = ifft(uh);
        std::vector<double> r(u.size());
        for (long i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i)].real();
        return r;
    }
};

// classical RK4 with fixed substeps per output interval
void rk4_evolve(std::vector<double>& u, double dt, int substeps,
                const std::function<std::vector<double>(const std::vector<double>&)>& rhs) {
    const double h = dt / substeps;
    const long n = static_cast<long>(u.size());
    for (int s = 0; s < substeps; ++s) {
        const std::vector<double> k1 = rhs(u);
        std::vector<double> tmp(u.size());
        for (long i = 0; i < n; ++i)
            tmp[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] + 0.5 * h * k1[static_cast<std::size_t>(i)];
        const std::vector<double> k2 = rhs(tmp);
        for (long i = 0; i < n; ++i)
            tmp[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] + 0.5 * h * k2[static_cast<std::size_t>(i)];
        const std::vector<double> k3 = rhs(tmp);
        for (long i = 0; i < n; ++i)
            tmp[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] + h * k3[static_cast<std::size_t>(i)];
        const std::vector<double> k4 = rhs(tmp);
        for (long i = 0; i < n; ++i)
            u[static_cast<std::size_t>(i)] +=
                h / 6.0 * (k1[static_cast<std::size_t>(i)] + 2.0 * k2[static_cast<std::size_t>(i)] +
                           2.0 * k3[static_cast<std::size_t>(i)] + k4[static_cast<std::size_t>(i)]);
    }
}

Field spectral_solve_1d(long nx, double x0, double dx, long nt, double dt, int substeps,
                        const std::function<double(double)>& init,
                        const std::function<std::vector<double>(const std::vector<double>&,
                                                                const SpectralDiff&)>& rhs) {
    SpectralDiff sd(nx, dx);
    std::vector<double> u(static_cast<std::size_t>(nx));
    for (long i = 0; i < nx; ++i) u[static_cast<std::size_t>(i)] = init(x0 + dx * i);

    std::vector<double> values(static_cast<std::size_t>(nx * nt));
    auto store = [&](long it, const std::vector<double>& slice) {
        std::copy(slice.begin(), slice.end(), values.begin() + static_cast<std::ptrdiff_t>(it * nx));
    };
    store(0, u);
    auto f = [&](const std::vector<double>& v) { return rhs(v, sd); };
    for (long it = 1; it < nt; ++it) {
        rk4_evolve(u, dt, substeps, f);
        store(it, u);
    }
    return Field({nx, nt}, {dx, dt}, {x0, 0.0}, std::move(values));
}

std::pair<Field, GroundTruth> gen_transport(const SystemSpec& spec) {
    const double c = spec.param("c", 3.0);
    const long nx = 601, nt = 201;
    const double dx = 0.01, dt = 0.01, x0 = -5.0;
    std::vector<double> v(static_cast<std::size_t>(nx * nt));
    for (long it = 0; it < nt; ++it)
        for (long ix = 0; ix < nx; ++ix) {
            const double x = x0 + dx * ix, t = dt * it;
            v[static_cast<std::size_t>(ix + nx * it)] = std::exp(-(x + c * t) * (x + c * t));
        }
    return {Field({nx, nt}, {dx, dt}, {x0, 0.0}, std::move(v)), GroundTruth{{{"u_x", c}}}};
}

std::pair<Field, GroundTruth> gen_heat(const SystemSpec& spec) {
    const double k = spec.param("k", 10.0);
    const double L = spec.param("L", 5.0);
    const long nx = 501, nt = 151;
    const double dx = 0.01, dt = 0.01;
    const double w = std::numbers::pi / L;
    std::vector<double> v(static_cast<std::size_t>(nx * nt));
    for (long it = 0; it < nt; ++it)
        for (long ix = 0; ix < nx; ++ix) {
            const double x = dx * ix, t = dt * it;
            v[static_cast<std::size_t>(ix + nx * it)] = 6.0 * std::sin(w * x) * std::exp(-k * w * w * t);
        }
    return {Field({nx, nt}, {dx, dt}, {0.0, 0.0}, std::move(v)), GroundTruth{{{"u_xx", k}}}};
}

// Two-soliton closed form u = 2 d^2/dx^2 ln(1 + B1 e^t1 + B2 e^t2 + A B1 B2 e^(t1+t2)).
// Note the appendix prints a leading minus; with these phases the positive
// sign is the branch that satisfies u_t = -6 u u_x - u_xxx.
double kdv_two_soliton(double x, double t, double a1, double a2, double B1, double B2) {
    const double A = ((a1 - a2) / (a1 + a2)) * ((a1 - a2) / (a1 + a2));
    const double e1 = B1 * std::exp(a1 * x - a1 * a1 * a1 * t);
    const double e2 = B2 * std::exp(a2 * x - a2 * a2 * a2 * t);
    const double e12 = A * B1 * B2 * std::exp((a1 + a2) * x - (a1 * a1 * a1 + a2 * a2 * a2) * t);
    const double f = 1.0 + e1 + e2 + e12;
    const double fx = a1 * e1 + a2 * e2 + (a1 + a2) * e12;
    const double fxx = a1 * a1 * e1 + a2 * a2 * e2 + (a1 + a2) * (a1 + a2) * e12;
    return 2.0 * (fxx * f - fx * fx) / (f * f);
}

std::pair<Field, GroundTruth> gen_kdv(const SystemSpec& spec) {
    const double a1 = spec.param("a1", 0.5), a2 = spec.param("a2", 1.0);
    const double B1 = spec.param("B1", 1.0), B2 = spec.param("B2", 5.0);
    const long nx = 512, nt = 201;
    const double x0 = -30.0, x1 = 30.0, dx = (x1 - x0) / (nx - 1);
    const double dt = 20.0 / (nt - 1);
    std::vector<double> v(static_cast<std::size_t>(nx * nt));
    for (long it = 0; it < nt; ++it)
        for (long ix = 0; ix < nx; ++ix)
            v[static_cast<std::size_t>(ix + nx * it)] =
                kdv_two_soliton(x0 + dx * ix, dt * it, a1, a2, B1, B2);
    return {Field({nx, nt}, {dx, dt}, {x0, 0.0}, std::move(v)),
            GroundTruth{{{"u*u_x", -6.0}, {"u_xxx", -1.0}}}};
}

std::pair<Field, GroundTruth> gen_burgers(const SystemSpec& spec) {
    const double nu = spec.param("nu", 0.1);
    const long nx = 256, nt = 101;
    const double x0 = -8.0, dx = 16.0 / nx, dt = 0.1;
    Field f = spectral_solve_1d(
        nx, x0, dx, nt, dt, 10,
        [](double x) { return std::exp(-(x + 2.0) * (x + 2.0)); },
        [nu](const std::vector<double>& u, const SpectralDiff& sd) {
            const std::vector<double> ux = sd.deriv(u, 1);
            const std::vector<double> uxx = sd.deriv(u, 2);
            std::vector<double> r(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) r[i] = -u[i] * ux[i] + nu * uxx[i];
            return r;
        });
    return {std::move(f), GroundTruth{{{"u*u_x", -1.0}, {"u_xx", nu}}}};
}

std::pair<Field, GroundTruth> gen_cable(const SystemSpec& spec) {
    const double lam = spec.param("lambda", 1.0), tau = spec.param("tau", 1.0);
    const long nx = 81, nt = 501;
    const double x0 = -4.0, dx = 0.1, dt = 0.01;
    Field f = spectral_solve_1d(
        nx, x0, dx, nt, dt, 10, [](double x) { return std::exp(-x * x); },
        [lam, tau](const std::vector<double>& u, const SpectralDiff& sd) {
            const std::vector<double> uxx = sd.deriv(u, 2);
            std::vector<double> r(u.size());
            for (std::size_t i = 0; i < u.size(); ++i)
                r[i] = (lam * lam * uxx[i] - u[i]) / tau;
            return r;
        });
    return {std::move(f),
            GroundTruth{{{"u", -1.0 / tau}, {"u_xx", lam * lam / tau}}}};
}

std::pair<Field, GroundTruth> gen_advdiff(const SystemSpec& spec) {
    const double D = spec.param("D", 1.0), a = spec.param("u", 1.0);
    const long nx = 201, nt = 1001;
    const double x0 = -10.0, dx = 0.1, dt = 0.01;
    Field f = spectral_solve_1d(
        nx, x0, dx, nt, dt, 10,
        [](double x) { return std::exp(-(x + 2.0) * (x + 2.0)); },
        [D, a](const std::vector<double>& u, const SpectralDiff& sd) {
            const std::vector<double> ux = sd.deriv(u, 1);
            const std::vector<double> uxx = sd.deriv(u, 2);
            std::vector<double> r(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) r[i] = D * uxx[i] - a * ux[i];
            return r;
        });
    return {std::move(f), GroundTruth{{{"u_x", -a}, {"u_xx", D}}}};
}

// split-step Fourier (Strang) for u_t = (i/2) u_xx - i (x^2/2) u
std::pair<Field, GroundTruth> gen_qho(const SystemSpec&) {
    const long nx = 512, nt = 401;
    const double x0 = -7.5, dx = 15.0 / nx, dt = 0.025;
    const std::vector<double> k = fft_wavenumbers(nx, dx);

    cvec u(static_cast<std::size_t>(nx));
    cvec half_kick(static_cast<std::size_t>(nx)), kinetic(static_cast<std::size_t>(nx));
    for (long i = 0; i < nx; ++i) {
        const double x = x0 + dx * i;
        const double g = (x - 1.0) / 2.0;
        u[static_cast<std::size_t>(i)] = std::exp(-g * g);
        half_kick[static_cast<std::size_t>(i)] = std::exp(std::complex<double>(0.0, -0.25 * x * x * dt));
        const double ki = k[static_cast<std::size_t>(i)];
        kinetic[static_cast<std::size_t>(i)] = std::exp(std::complex<double>(0.0, -0.5 * ki * ki * dt));
    }

    std::vector<double> re(static_cast<std::size_t>(nx * nt)), im(static_cast<std::size_t>(nx * nt));
    auto store = [&](long it) {
        for (long i = 0; i < nx; ++i) {
            re[static_cast<std::size_t>(i + nx * it)] = u[static_cast<std::size_t>(i)].real();
            im[static_cast<std::size_t>(i + nx * it)] = u[static_cast<std::size_t>(i)].imag();
        }
    };
    store(0);
    for (long it = 1; it < nt; ++it) {
        for (long i = 0; i < nx; ++i) u[static_cast<std::size_t>(i)] *= half_kick[static_cast<std::size_t>(i)];
        u = fft(u);
        for (long i = 0; i < nx; ++i) u[static_cast<std::size_t>(i)] *= kinetic[static_cast<std::size_t>(i)];
        u = ifft(u);
        for (long i = 0; i < nx; ++i) u[static_cast<std::size_t>(i)] *= half_kick[static_cast<std::size_t>(i)];
        store(it);
    }
    Field f({nx, nt}, {dx, dt}, {x0, 0.0}, std::move(re), std::move(im));
    return {std::move(f), GroundTruth{{{"u_xx.im", 0.5}, {"x^2*u.im", -0.5}}}};
}

std::pair<Field, GroundTruth> gen_whitenoise(const SystemSpec& spec) {
    const double sigma = spec.param("sigma", 1.0);
    if (!(sigma > 0.0)) throw DatagenError("whitenoise: sigma must be positive");
    const long nx = spec.desk ? 500 : 2000;
    const long nt = spec.desk ? 250 : 1000;
    const double dx = 0.1, dt = 0.01;
    Rng rng(spec.seed);
    std::vector<double> v(static_cast<std::size_t>(nx * nt));
    for (auto& x : v) x = sigma * rng.normal();
    return {Field({nx, nt}, {dx, dt}, {0.0, 0.0}, std::move(v)), GroundTruth{}};
}

}  // namespace

std::vector<std::string> known_systems() {
    return {"transport", "heat", "kdv2soliton", "burgers", "cable", "advdiff", "qho", "whitenoise"};
}

GroundTruth ground_truth(const SystemSpec& spec) {
    const double tau = spec.param("tau", 1.0), lam = spec.param("lambda", 1.0);
    if (spec.system == "transport") return GroundTruth{{{"u_x", spec.param("c", 3.0)}}};
    if (spec.system == "heat") return GroundTruth{{{"u_xx", spec.param("k", 10.0)}}};
    if (spec.system == "kdv2soliton" || spec.system == "kdv")
        return GroundTruth{{{"u*u_x", -6.0}, {"u_xxx", -1.0}}};
    if (spec.system == "burgers")
        return GroundTruth{{{"u*u_x", -1.0}, {"u_xx", spec.param("nu", 0.1)}}};
    if (spec.system == "cable")
        return GroundTruth{{{"u", -1.0 / tau}, {"u_xx", lam * lam / tau}}};
    if (spec.system == "advdiff")
        return GroundTruth{{{"u_x", -spec.param("u", 1.0)}, {"u_xx", spec.param("D", 1.0)}}};
    if (spec.system == "qho") return GroundTruth{{{"u_xx.im", 0.5}, {"x^2*u.im", -0.5}}};
    if (spec.system == "whitenoise") return GroundTruth{};
    throw DatagenError("unknown system id: " + spec.system);
}

std::pair<Field, GroundTruth> generate(const SystemSpec& spec) {
    if (spec.system == "transport") return gen_transport(spec);
    if (spec.system == "heat") return gen_heat(spec);
    if (spec.system == "kdv2soliton" || spec.system == "kdv") return gen_kdv(spec);
    if (spec.system == "burgers") return gen_burgers(spec);
    if (spec.system == "cable") return gen_cable(spec);
    if (spec.system == "advdiff") return gen_advdiff(spec);
    if (spec.system == "qho") return gen_qho(spec);
    if (spec.system == "whitenoise") return gen_whitenoise(spec);
    throw DatagenError("unknown system id: " + spec.system);
}

Field inject_noise(const Field& field, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return field;
    if (std::isnan(snr_db)) throw DatagenError("inject_noise: snr must be a number or +inf");

    // sample standard deviation over all components (re and im stacked)
    double mean = 0.0;
    long count = static_cast<long>(field.re().size()) * (field.is_complex() ? 2 : 1);
    for (double v : field.re()) mean += v;
    for (double v : field.im()) mean += v;
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (double v : field.re()) ss += (v - mean) * (v - mean);
    for (double v : field.im()) ss += (v - mean) * (v - mean);
    const double sigma_u = std::sqrt(ss / static_cast<double>(count - 1));
    if (!(sigma_u > 0.0)) throw DatagenError("inject_noise: constant field with finite SNR");

    const double sigma_z = sigma_u * std::pow(10.0, -snr_db / 20.0);
    Rng rng(seed);
    std::vector<double> re = field.re();
    for (auto& v : re) v += sigma_z * rng.normal();
    if (!field.is_complex())
        return Field(field.shape(), field.spacing_all(), field.origin(), std::move(re));
    std::vector<double> im = field.im();
    for (auto& v : im) v += sigma_z * rng.normal();
    return Field(field.shape(), field.spacing_all(), field.origin(), std::move(re), std::move(im));
}

namespace {

std::mutex cache_mutex;
std::map<std::string, std::pair<DesignMatrix, GroundTruth>>& trial_cache() {
    static auto* c = new std::map<std::string, std::pair<DesignMatrix, GroundTruth>>();
    return *c;
}

std::string cache_key(const SystemSpec& spec, const LibrarySpec& lib) {
    std::string key = spec.system + "|d" + std::to_string(lib.d_max) + "r" +
                      std::to_string(lib.r_max) + "c" + std::to_string(lib.include_constant) +
                      "|s" + std::to_string(spec.seed) + (spec.desk ? "|desk" : "");
    for (const auto& [k, v] : spec.params) key += "|" + k + "=" + std::to_string(v);
    return key;
}

std::pair<DesignMatrix, GroundTruth> build_full(const SystemSpec& spec, const LibrarySpec& lib,
                                                std::optional<double> snr,
                                                std::uint64_t noise_seed) {
    auto [field, truth] = generate(spec);
    Field data = (snr && !(std::isinf(*snr) && *snr > 0)) ? inject_noise(field, *snr, noise_seed)
                                                          : std::move(field);
    DerivativeSet ds = compute_derivatives(data, lib.r_max);
    DesignMatrix dm = assemble(ds, lib);
    if (dm.complex_entries) dm = complexify(dm);
    return {std::move(dm), std::move(truth)};
}

}  // namespace

std::pair<DesignMatrix, GroundTruth> make_trial(const SystemSpec& spec, const TrialOptions& opt,
                                                const LibrarySpec& lib, long trial_index,
                                                std::uint64_t base_seed) {
    if (opt.snr_db.has_value() == opt.sample_size.has_value())
        throw DatagenError("make_trial: set exactly one of snr_db / sample_size");
    const std::uint64_t trial_seed = base_seed + static_cast<std::uint64_t>(trial_index);

    if (opt.snr_db) return build_full(spec, lib, *opt.snr_db, trial_seed);

    // sample-size trial: noiseless full design, cached across trials
    const std::string key = cache_key(spec, lib);
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = trial_cache().find(key);
        if (it != trial_cache().end())
            return {subsample_rows(it->second.first, *opt.sample_size, trial_seed),
                    it->second.second};
    }
    auto full = build_full(spec, lib, std::nullopt, 0);
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto [it, inserted] = trial_cache().emplace(key, std::move(full));
    return {subsample_rows(it->second.first, *opt.sample_size, trial_seed), it->second.second};
}

void clear_trial_cache() {
    std::lock_guard<std::mutex> lock(cache_mutex);
    trial_cache().clear();
}

}  // namespace pdeid
