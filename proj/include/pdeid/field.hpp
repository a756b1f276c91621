// SPDX-License-Identifier: Apache-2.0
#ifndef PDEID_FIELD_HPP
#define PDEID_FIELD_HPP

#include <complex>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdeid {

class FieldError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Samples of u(x[,y],t) on a uniform grid. Values are stored in the canonical
// vectorized order: x fastest, then y (if present), then t, so vectorize() is
// the identity on storage. The last axis is always time.
class Field {
  public:
    Field() = default;

    // real field; values given in canonical order
    Field(std::vector<long> shape, std::vector<double> spacing, std::vector<double> origin,
          std::vector<double> values, bool raw_ingested = false);

    // complex field
    Field(std::vector<long> shape, std::vector<double> spacing, std::vector<double> origin,
          std::vector<double> re, std::vector<double> im, bool raw_ingested = false);

    bool is_complex() const { return !im_.empty(); }
    bool raw_ingested() const { return raw_; }

    int num_axes() const { return static_cast<int>(shape_.size()); }
    int spatial_dims() const { return num_axes() - 1; }
    int time_axis() const { return num_axes() - 1; }
    long axis_len(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
    long size() const;

    const std::vector<long>& shape() const { return shape_; }
    const std::vector<double>& spacing_all() const { return spacing_; }
    const std::vector<double>& origin() const { return origin_; }
    double spacing(int axis) const { return spacing_.at(static_cast<std::size_t>(axis)); }
    double dt() const { return spacing_.back(); }

    const std::vector<double>& re() const { return re_; }
    const std::vector<double>& im() const { return im_; }
    std::vector<double>& re() { return re_; }
    std::vector<double>& im() { return im_; }

    double& at(long ix, long it);
    double at(long ix, long it) const;
    std::complex<double> cval(long flat) const {
        return {re_[static_cast<std::size_t>(flat)],
                im_.empty() ? 0.0 : im_[static_cast<std::size_t>(flat)]};
    }

    long flat_index(const std::vector<long>& idx) const;
    // coordinate of grid index along an axis
    double coord(int axis, long i) const {
        return origin_[static_cast<std::size_t>(axis)] +
               spacing_[static_cast<std::size_t>(axis)] * static_cast<double>(i);
    }

    // stride (in elements) of one step along `axis` in the canonical layout
    long stride(int axis) const;

    // magnitude field |u| (real); identity copy for real fields
    Field magnitude() const;

    // shape/spacing/origin copied, values zero, same complexity
    Field like_zero() const;

    bool same_grid(const Field& other) const;

    void validate() const;  // throws FieldError on violated invariants

  private:
    std::vector<long> shape_;      // (n_x[, n_y], n_t)
    std::vector<double> spacing_;  // (dx[, dy], dt)
    std::vector<double> origin_;
    std::vector<double> re_;
    std::vector<double> im_;  // empty for real fields
    bool raw_ = false;
};

// Eq.-(4)-order flattening: space fastest, time slowest. Complex fields use
// vectorize_complex.
std::vector<double> vectorize(const Field& f);
std::vector<std::complex<double>> vectorize_complex(const Field& f);

// inverse of vectorize given grid metadata
Field unvectorize(const std::vector<double>& v, std::vector<long> shape,
                  std::vector<double> spacing, std::vector<double> origin);

// FLD1 file format (ASCII header + raw little-endian float64 payload)
void field_write(const Field& f, const std::filesystem::path& path);
Field field_read(const std::filesystem::path& path, bool strict_finite = true);

}  // namespace pdeid

#endif
