#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace nlgen {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. All model weights are 64-bit so that
/// training and decoding are reproducible bit-for-bit.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const = default;
};

/// y = A x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == a.cols && y.size() == a.rows);
    const double* p = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, p += a.cols) {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) acc += p[c] * x[c];
        y[r] = acc;
    }
}

/// y += A x
inline void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == a.cols && y.size() == a.rows);
    const double* p = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, p += a.cols) {
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) acc += p[c] * x[c];
        y[r] += acc;
    }
}

/// y += A^T x  (x over rows, y over cols); row-major friendly accumulation.
inline void matvec_transposed_add(const Matrix& a, std::span<const double> x,
                                  std::span<double> y) {
    assert(x.size() == a.rows && y.size() == a.cols);
    const double* p = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, p += a.cols) {
        double xr = x[r];
        if (xr == 0.0) continue;
        for (std::size_t c = 0; c < a.cols; ++c) y[c] += xr * p[c];
    }
}

/// A += scale * u v^T
inline void add_outer(Matrix& a, double scale, std::span<const double> u,
                      std::span<const double> v) {
    assert(u.size() == a.rows && v.size() == a.cols);
    double* p = a.data.data();
    for (std::size_t r = 0; r < a.rows; ++r, p += a.cols) {
        double s = scale * u[r];
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < a.cols; ++c) p[c] += s * v[c];
    }
}

/// y += a x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

}  // namespace nlgen
