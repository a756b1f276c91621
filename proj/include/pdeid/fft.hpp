// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_FFT_HPP
#define PDEID_FFT_HPP

#include <complex>
#include <vector>

namespace pdeid {

// Forward/inverse DFT with the unitary-free convention
//   X_k = sum_j x_j exp(-2*pi*i*j*k/n),  ifft(fft(x)) = x.
// Any length is supported (FFTW mixed-radix backend). Thread-safe.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x);
std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& x);

// Angular wavenumbers 2*pi*j/(n*dx) in FFT storage order, j = 0..n/2, -(n/2-1)..-1.
std::vector<double> fft_wavenumbers(long n, double dx);

}  // namespace pdeid

#endif
