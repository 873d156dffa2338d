#include "lista/kernels/kernels.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace lista::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l1_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

double l2sq_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

double linf_scalar(const double* a, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::fabs(a[i]);
        if (v > m) m = v;
    }
    return m;
}

double diff_l2sq_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void soft_threshold_scalar(const double* v, double theta, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::fabs(v[i]) - theta;
        out[i] = a > 0.0 ? (v[i] < 0.0 ? -a : a) : 0.0;
    }
}

void momentum_combine_scalar(const double* x, const double* xprev, const double* u,
                             double gamma, double beta, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = x[i] + gamma * u[i] + beta * (x[i] - xprev[i]);
}

void gemv_n_scalar(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
    for (std::size_t i = 0; i < r; ++i) y[i] = dot_scalar(A + i * c, x, c);
}

void gemv_t_scalar(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
    std::memset(y, 0, c * sizeof(double));
    for (std::size_t i = 0; i < r; ++i) axpy_scalar(x[i], A + i * c, y, c);
}

void residual_scalar(const double* A, std::size_t r, std::size_t c, const double* x,
                     const double* b, double* out) {
    for (std::size_t i = 0; i < r; ++i) out[i] = b[i] - dot_scalar(A + i * c, x, c);
}

void gemm_nn_scalar(const double* A, std::size_t r, std::size_t k, const double* B,
                    std::size_t n, double* C) {
    std::memset(C, 0, r * n * sizeof(double));
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_scalar(arow[p], B + p * n, crow, n);
    }
}

void gram_n_scalar(const double* M, std::size_t r, std::size_t c, double* C) {
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i; j < r; ++j) {
            const double v = dot_scalar(M + i * c, M + j * c, c);
            C[i * r + j] = v;
            C[j * r + i] = v;
        }
    }
}

void gram_t_scalar(const double* M, std::size_t r, std::size_t c, double* C) {
    std::memset(C, 0, c * c * sizeof(double));
    for (std::size_t l = 0; l < r; ++l) {
        const double* row = M + l * c;
        for (std::size_t i = 0; i < c; ++i) {
            if (row[i] != 0.0) axpy_scalar(row[i], row, C + i * c, c);
        }
    }
}

const Kernels kScalar = {
    "scalar",         dot_scalar,    l1_scalar,         l2sq_scalar,
    linf_scalar,      diff_l2sq_scalar, axpy_scalar,    soft_threshold_scalar,
    momentum_combine_scalar, gemv_n_scalar, gemv_t_scalar, residual_scalar,
    gemm_nn_scalar,   gram_n_scalar, gram_t_scalar,
};

const Kernels* pick_default() {
    if (const Kernels* v = avx2(); v && avx2_supported()) return v;
    return &kScalar;
}

const Kernels*& active_slot() {
    static const Kernels* slot = pick_default();
    return slot;
}

}  // namespace

const Kernels& scalar() { return kScalar; }

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& active() { return *active_slot(); }

void select(std::string_view which) {
    if (which == "scalar") {
        active_slot() = &kScalar;
    } else if (which == "avx2") {
        const Kernels* v = avx2();
        if (!v) throw std::invalid_argument("avx2 kernels not compiled into this build");
        if (!avx2_supported()) throw std::invalid_argument("avx2 not supported on this cpu");
        active_slot() = v;
    } else if (which == "auto") {
        active_slot() = pick_default();
    } else {
        throw std::invalid_argument("unknown kernel set: " + std::string(which));
    }
}

}  // namespace lista::kernels
