// SPDX-License-Identifier: Apache-2.0
#include "pdeid/field.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pdeid {

namespace {

long checked_product(const std::vector<long>& shape) {
    long p = 1;
    for (long s : shape) {
        if (s <= 0) throw FieldError("field shape entries must be positive");
        p *= s;
    }
    return p;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw FieldError(msg);
}

}  // namespace

Field::Field(std::vector<long> shape, std::vector<double> spacing, std::vector<double> origin,
             std::vector<double> values, bool raw_ingested)
    : shape_(std::move(shape)),
      spacing_(std::move(spacing)),
      origin_(std::move(origin)),
      re_(std::move(values)),
      raw_(raw_ingested) {
    validate();
}

Field::Field(std::vector<long> shape, std::vector<double> spacing, std::vector<double> origin,
             std::vector<double> re, std::vector<double> im, bool raw_ingested)
    : shape_(std::move(shape)),
      spacing_(std::move(spacing)),
      origin_(std::move(origin)),
      re_(std::move(re)),
      im_(std::move(im)),
      raw_(raw_ingested) {
    require(re_.size() == im_.size(), "complex field: re/im length mismatch");
    validate();
}

long Field::size() const {
    long p = 1;
    for (long s : shape_) p *= s;
    return p;
}

double& Field::at(long ix, long it) {
    return re_[static_cast<std::size_t>(ix + shape_[0] * it)];
}

double Field::at(long ix, long it) const {
    return re_[static_cast<std::size_t>(ix + shape_[0] * it)];
}

long Field::flat_index(const std::vector<long>& idx) const {
    long flat = 0, mul = 1;
    for (std::size_t a = 0; a < shape_.size(); ++a) {
        flat += idx[a] * mul;
        mul *= shape_[a];
    }
    return flat;
}

long Field::stride(int axis) const {
    long s = 1;
    for (int a = 0; a < axis; ++a) s *= shape_[static_cast<std::size_t>(a)];
    return s;
}

Field Field::magnitude() const {
    if (!is_complex()) return *this;
    std::vector<double> mag(re_.size());
    for (std::size_t i = 0; i < re_.size(); ++i) mag[i] = std::hypot(re_[i], im_[i]);
    return Field(shape_, spacing_, origin_, std::move(mag), raw_);
}

Field Field::like_zero() const {
    std::vector<double> z(re_.size(), 0.0);
    if (is_complex()) return Field(shape_, spacing_, origin_, z, z, raw_);
    return Field(shape_, spacing_, origin_, std::move(z), raw_);
}

bool Field::same_grid(const Field& other) const {
    return shape_ == other.shape_ && spacing_ == other.spacing_ && origin_ == other.origin_;
}

void Field::validate() const {
    require(shape_.size() == 2 || shape_.size() == 3, "field must have 1 or 2 spatial axes + time");
    require(spacing_.size() == shape_.size(), "spacing arity mismatch");
    require(origin_.size() == shape_.size(), "origin arity mismatch");
    const long n = checked_product(shape_);
    require(static_cast<long>(re_.size()) == n, "value count does not match shape product");
    for (double s : spacing_) require(s > 0.0 && std::isfinite(s), "grid spacing must be positive");
    if (!raw_) {
        for (double v : re_) require(std::isfinite(v), "non-finite value in field");
        for (double v : im_) require(std::isfinite(v), "non-finite value in field");
    }
}

std::vector<double> vectorize(const Field& f) {
    return f.re();  // storage is already in Eq.-(4) order
}

std::vector<std::complex<double>> vectorize_complex(const Field& f) {
    std::vector<std::complex<double>> out(f.re().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.cval(static_cast<long>(i));
    return out;
}

Field unvectorize(const std::vector<double>& v, std::vector<long> shape,
                  std::vector<double> spacing, std::vector<double> origin) {
    return Field(std::move(shape), std::move(spacing), std::move(origin), v);
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_doubles_le(std::ostream& os, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * 8));
    } else {
        for (double d : v) {
            std::uint64_t u;
            std::memcpy(&u, &d, 8);
            char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
            os.write(b, 8);
        }
    }
}

void read_doubles_le(std::istream& is, std::vector<double>& v, std::size_t count) {
    v.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            char b[8];
            is.read(b, 8);
            std::uint64_t u = 0;
            for (int k = 0; k < 8; ++k)
                u |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[k])) << (8 * k);
            std::memcpy(&v[i], &u, 8);
        }
    }
}

}  // namespace

void field_write(const Field& f, const std::filesystem::path& path) {
    f.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FieldError("cannot open for writing: " + path.string());
    const int ndim = f.spatial_dims();
    os << "FLD1\n";
    os << "ndim " << ndim << "\n";
    os << "shape";
    for (long s : f.shape()) os << " " << s;
    os << "\nspacing";
    for (double s : f.spacing_all()) os << " " << format_double(s);
    os << "\norigin";
    for (double s : f.origin()) os << " " << format_double(s);
    os << "\ndtype " << (f.is_complex() ? "complex" : "real") << "\n";
    os << "end\n";
    if (f.is_complex()) {
        std::vector<double> interleaved(f.re().size() * 2);
        for (std::size_t i = 0; i < f.re().size(); ++i) {
            interleaved[2 * i] = f.re()[i];
            interleaved[2 * i + 1] = f.im()[i];
        }
        write_doubles_le(os, interleaved);
    } else {
        write_doubles_le(os, f.re());
    }
    if (!os) throw FieldError("write failed: " + path.string());
}

Field field_read(const std::filesystem::path& path, bool strict_finite) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FieldError("cannot open: " + path.string());

    auto next_line = [&is, &path]() {
        std::string line;
        if (!std::getline(is, line)) throw FieldError("truncated header: " + path.string());
        return line;
    };

    if (next_line() != "FLD1") throw FieldError("bad magic, not an FLD1 file: " + path.string());

    int ndim = 0;
    std::vector<long> shape;
    std::vector<double> spacing, origin;
    bool complex_dtype = false;
    bool saw_end = false;
    while (!saw_end) {
        std::istringstream ls(next_line());
        std::string key;
        ls >> key;
        if (key == "ndim") {
            ls >> ndim;
            if (ndim != 1 && ndim != 2) throw FieldError("ndim must be 1 or 2");
        } else if (key == "shape") {
            long v;
            while (ls >> v) shape.push_back(v);
        } else if (key == "spacing") {
            double v;
            while (ls >> v) spacing.push_back(v);
        } else if (key == "origin") {
            double v;
            while (ls >> v) origin.push_back(v);
        } else if (key == "dtype") {
            std::string d;
            ls >> d;
            if (d == "real")
                complex_dtype = false;
            else if (d == "complex")
                complex_dtype = true;
            else
                throw FieldError("unknown dtype: " + d);
        } else if (key == "end") {
            saw_end = true;
        } else {
            throw FieldError("unknown header key: " + key);
        }
    }
    if (ndim == 0 || shape.empty() || spacing.empty() || origin.empty())
        throw FieldError("incomplete FLD1 header: " + path.string());
    if (static_cast<int>(shape.size()) != ndim + 1 || spacing.size() != shape.size() ||
        origin.size() != shape.size())
        throw FieldError("header arity mismatch: " + path.string());

    long n = 1;
    for (long s : shape) {
        if (s <= 0) throw FieldError("non-positive shape entry");
        n *= s;
    }
    const std::size_t payload = static_cast<std::size_t>(n) * (complex_dtype ? 2 : 1);
    std::vector<double> raw;
    read_doubles_le(is, raw, payload);
    if (!is) throw FieldError("payload shorter than header shape: " + path.string());
    // reject trailing bytes
    char extra;
    if (is.read(&extra, 1)) throw FieldError("payload longer than header shape: " + path.string());

    if (strict_finite) {
        for (double v : raw)
            if (!std::isfinite(v)) throw FieldError("non-finite value with strict flag set");
    }

    if (complex_dtype) {
        std::vector<double> re(static_cast<std::size_t>(n)), im(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) {
            re[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(2 * i)];
            im[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(2 * i + 1)];
        }
        return Field(shape, spacing, origin, std::move(re), std::move(im), !strict_finite);
    }
    return Field(shape, spacing, origin, std::move(raw), !strict_finite);
}

}  // namespace pdeid
