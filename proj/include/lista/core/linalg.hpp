#pragma once

#include <cassert>
#include <cmath>
#include <span>

#include "lista/core/types.hpp"
#include "lista/kernels/kernels.hpp"

namespace lista {

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return kernels::active().dot(a.data(), b.data(), a.size());
}
inline double l1_norm(std::span<const double> a) {
    return kernels::active().l1_norm(a.data(), a.size());
}
inline double l2_norm_sq(std::span<const double> a) {
    return kernels::active().l2_norm_sq(a.data(), a.size());
}
inline double l2_norm(std::span<const double> a) { return std::sqrt(l2_norm_sq(a)); }
inline double linf_norm(std::span<const double> a) {
    return kernels::active().linf_norm(a.data(), a.size());
}
inline double diff_l2_sq(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return kernels::active().diff_l2_sq(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

inline std::size_t count_nonzero(std::span<const double> a) {
    std::size_t c = 0;
    for (double v : a) c += (v != 0.0);
    return c;
}

/// y = M x
inline Vector matvec(const Matrix& m, std::span<const double> x) {
    assert(x.size() == m.cols());
    Vector y(m.rows());
    kernels::active().gemv_n(m.data(), m.rows(), m.cols(), x.data(), y.data());
    return y;
}

/// y = M^T x
inline Vector matvec_t(const Matrix& m, std::span<const double> x) {
    assert(x.size() == m.rows());
    Vector y(m.cols());
    kernels::active().gemv_t(m.data(), m.rows(), m.cols(), x.data(), y.data());
    return y;
}

/// out = b - M x
inline Vector residual(std::span<const double> b, const Matrix& m, std::span<const double> x) {
    assert(b.size() == m.rows() && x.size() == m.cols());
    Vector out(m.rows());
    kernels::active().residual(m.data(), m.rows(), m.cols(), x.data(), b.data(), out.data());
    return out;
}

/// C = A B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    assert(a.cols() == b.rows());
    Matrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.data(), a.rows(), a.cols(), b.data(), b.cols(), c.data());
    return c;
}

/// C = M M^T
inline Matrix gram_rows(const Matrix& m) {
    Matrix c(m.rows(), m.rows());
    kernels::active().gram_n(m.data(), m.rows(), m.cols(), c.data());
    return c;
}

/// C = M^T M
inline Matrix gram_cols(const Matrix& m) {
    Matrix c(m.cols(), m.cols());
    kernels::active().gram_t(m.data(), m.rows(), m.cols(), c.data());
    return c;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Frobenius distance squared to the identity, ||C - I||_F^2 for square C.
inline double frob_dist_identity_sq(const Matrix& c) {
    assert(c.rows() == c.cols());
    double s = 0.0;
    for (std::size_t i = 0; i < c.rows(); ++i) {
        for (std::size_t j = 0; j < c.cols(); ++j) {
            const double d = c(i, j) - (i == j ? 1.0 : 0.0);
            s += d * d;
        }
    }
    return s;
}

}  // namespace lista
