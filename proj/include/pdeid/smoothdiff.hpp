// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_SMOOTHDIFF_HPP
#define PDEID_SMOOTHDIFF_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pdeid/field.hpp"

namespace pdeid {

class SmoothDiffError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Savitzky-Golay filter configuration for one axis.
struct SGConfig {
    int order = 2;       // polynomial order o >= 2
    int window = 5;      // odd window length l
    int axis = 0;
    int deriv = 0;       // derivative order, <= o
    double step = 1.0;   // grid spacing along axis

    // minimum admissible window for a given polynomial order
    static int min_window(int order) { return order + 1 + (order % 2); }
    void validate(long axis_len) const;  // throws SmoothDiffError
};

// Separable (1,2,1)/4-per-axis blur; boundary samples are padded by linear
// extrapolation so the smoothed field stays kink-free at the edges. Every
// axis must have length >= 3.
Field gaussian_blur(const Field& field);

// Weights w such that sum_k w[k] * f(x_{i+k-(l-1)/2}) is the deriv-th
// derivative at x_i of the degree-o least-squares fit through the window,
// including the 1/step^deriv factor.
std::vector<double> sg_coefficients(const SGConfig& cfg);

// Weights for evaluating at an arbitrary position inside the window
// (eval_index in [0, l)); sg_coefficients is the centered special case.
std::vector<double> sg_coefficients_at(const SGConfig& cfg, int eval_index);

// Apply the filter along cfg.axis. Interior points use the symmetric window;
// boundary points fit the same degree-o polynomial to the l nearest in-bounds
// samples and evaluate at the boundary position. Complex fields are filtered
// on re/im parts independently.
Field sg_apply(const Field& field, const SGConfig& cfg);

// Hyperparameter search of Algorithm-1 style tuning: minimize
// MSE(SG(noisy,o,l,deriv=0), gaussian_blur(noisy)) over the admissible grid
// o in {2..6}, odd l in [o+1+(o mod 2), min(n-1, 51)]. MSE is taken over
// interior points (offset (l-1)/2 along the tuned axis). Ties break toward
// smaller l, then smaller o. Complex fields are tuned on |U|.
struct SGTuning {
    int order;
    int window;
    double mse;
};
SGTuning auto_tune_sg(const Field& noisy, int axis, int min_order = 2);

// Smoothed field plus the requested partial derivatives.
struct DerivativeSet {
    Field smoothed;  // gaussian_blur of the input
    std::map<std::pair<int, int>, Field> derivs;  // (axis, order) -> field
    std::vector<SGTuning> tuning;                 // per axis (index = axis)
    std::vector<std::string> notes;

    bool has(int axis, int order) const {
        return derivs.count({axis, order}) != 0;
    }
    const Field& deriv(int axis, int order) const;
};

// Tunes (o*, l*) independently per axis, smooths with the Gaussian blur and
// differentiates the blurred data: time derivative of order 1 (when
// include_t), spatial derivatives of order 1..max_x_order per spatial axis.
// A spatial request exceeding the tuned order triggers a re-tune with the
// order floored at the request (recorded in notes).
DerivativeSet compute_derivatives(const Field& noisy, int max_x_order, bool include_t = true);

}  // namespace pdeid

#endif
