// SPDX-License-Identifier: Apache-2.0
#include "pdeid/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pdeid {

namespace {

// FFTW plan creation is not thread-safe; execution with fftw_execute_dft on
// distinct buffers is. Plans are cached per (size, direction).
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan get_plan(long n, int sign) {
    struct Key {
        long n;
        int sign;
        bool operator<(const Key& o) const { return n != o.n ? n < o.n : sign < o.sign; }
    };
    static std::map<Key, fftw_plan>* cache = new std::map<Key, fftw_plan>();
    std::lock_guard<std::mutex> lock(plan_mutex());
    const Key key{n, sign};
    auto it = cache->find(key);
    if (it != cache->end()) return it->second;
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("fftw plan creation failed");
    (*cache)[key] = p;
    return p;
}

std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& x, int sign) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    std::vector<std::complex<double>> out(x.size());
    fftw_plan p = get_plan(static_cast<long>(x.size()), sign);
    // in-place on a private copy keeps execution re-entrant
    std::vector<std::complex<double>> buf = x;
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x) {
    return transform(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x) {
    std::vector<std::complex<double>> out = transform(x, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<double> fft_wavenumbers(long n, double dx) {
    std::vector<double> k(static_cast<std::size_t>(n));
    const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
    for (long j = 0; j < n; ++j) {
        const long jj = (j <= n / 2) ? j : j - n;
        k[static_cast<std::size_t>(j)] = base * static_cast<double>(jj);
    }
    return k;
}

}  // namespace pdeid
