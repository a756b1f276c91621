// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_DATAGEN_HPP
#define PDEID_DATAGEN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdeid/field.hpp"
#include "pdeid/library.hpp"

namespace pdeid {

class DatagenError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Benchmark dataset request. Grids and default parameters are fixed per
// system; params may override the physical constants.
struct SystemSpec {
    std::string system;  // transport|heat|kdv2soliton|burgers|cable|advdiff|qho|whitenoise
    std::map<std::string, double> params;
    std::uint64_t seed = 0;  // stochastic systems (whitenoise)
    bool desk = false;       // reduced whitenoise grid (500 x 250)

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

// True PDE right-hand side as (term name, coefficient) pairs; empty for
// whitenoise (no true model).
struct GroundTruth {
    std::vector<std::pair<std::string, double>> terms;
    bool empty() const { return terms.empty(); }
};

std::vector<std::string> known_systems();

std::pair<Field, GroundTruth> generate(const SystemSpec& spec);

// truth terms without generating the dataset
GroundTruth ground_truth(const SystemSpec& spec);

// Additive i.i.d. Gaussian noise at the requested SNR (dB):
// sigma_Z = sigma_U * 10^(-snr/20), sigma_U the sample standard deviation.
// Complex fields receive independent re/im noise, each with sigma_Z computed
// from the stacked (re, im) samples. +infinity returns the field unchanged.
Field inject_noise(const Field& field, double snr_db, std::uint64_t seed);

// One benchmark trial: either an SNR trial (noise injected with seed
// base_seed + trial_index, full grid) or a sample-size trial (noiseless
// data subsampled to sample_size rows with the trial seed). Exactly one of
// snr_db / sample_size must be set. Complex systems come back complexified.
struct TrialOptions {
    std::optional<double> snr_db;
    std::optional<long> sample_size;
};

std::pair<DesignMatrix, GroundTruth> make_trial(const SystemSpec& spec, const TrialOptions& opt,
                                                const LibrarySpec& lib, long trial_index,
                                                std::uint64_t base_seed);

// drop the cached noiseless design matrices (test hook)
void clear_trial_cache();

}  // namespace pdeid

#endif
