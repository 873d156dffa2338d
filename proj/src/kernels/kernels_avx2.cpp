// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma -ffp-contract=off:
// explicit intrinsics decide where FMA happens, tail loops stay mul+add so
// elementwise kernels match the scalar reference bit for bit.

#include "lista/kernels/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace lista::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
const __m256d kSignMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x8000000000000000ULL));

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l1_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(a + i), kAbsMask));
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

double l2sq_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

double linf_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_max_pd(acc, _mm256_and_pd(_mm256_loadu_pd(a + i), kAbsMask));
    double m = hmax(acc);
    for (; i < n; ++i) {
        const double v = std::fabs(a[i]);
        if (v > m) m = v;
    }
    return m;
}

double diff_l2sq_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void soft_threshold_avx2(const double* v, double theta, double* out, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(theta);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(v + i);
        const __m256d mag = _mm256_sub_pd(_mm256_and_pd(x, kAbsMask), vt);
        const __m256d keep = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
        const __m256d signed_mag = _mm256_or_pd(mag, _mm256_and_pd(x, kSignMask));
        _mm256_storeu_pd(out + i, _mm256_and_pd(signed_mag, keep));
    }
    for (; i < n; ++i) {
        const double a = std::fabs(v[i]) - theta;
        out[i] = a > 0.0 ? (v[i] < 0.0 ? -a : a) : 0.0;
    }
}

void momentum_combine_avx2(const double* x, const double* xprev, const double* u,
                           double gamma, double beta, double* out, std::size_t n) {
    const __m256d vg = _mm256_set1_pd(gamma);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d dv = _mm256_sub_pd(xv, _mm256_loadu_pd(xprev + i));
        const __m256d a = _mm256_add_pd(xv, _mm256_mul_pd(vg, _mm256_loadu_pd(u + i)));
        _mm256_storeu_pd(out + i, _mm256_add_pd(a, _mm256_mul_pd(vb, dv)));
    }
    for (; i < n; ++i) {
        const double gu = gamma * u[i];
        const double bd = beta * (x[i] - xprev[i]);
        out[i] = (x[i] + gu) + bd;
    }
}

void gemv_n_avx2(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
    for (std::size_t i = 0; i < r; ++i) y[i] = dot_avx2(A + i * c, x, c);
}

void gemv_t_avx2(const double* A, std::size_t r, std::size_t c, const double* x, double* y) {
    std::memset(y, 0, c * sizeof(double));
    for (std::size_t i = 0; i < r; ++i) axpy_avx2(x[i], A + i * c, y, c);
}

void residual_avx2(const double* A, std::size_t r, std::size_t c, const double* x,
                   const double* b, double* out) {
    for (std::size_t i = 0; i < r; ++i) out[i] = b[i] - dot_avx2(A + i * c, x, c);
}

void gemm_nn_avx2(const double* A, std::size_t r, std::size_t k, const double* B,
                  std::size_t n, double* C) {
    std::memset(C, 0, r * n * sizeof(double));
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_avx2(arow[p], B + p * n, crow, n);
    }
}

void gram_n_avx2(const double* M, std::size_t r, std::size_t c, double* C) {
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i; j < r; ++j) {
            const double v = dot_avx2(M + i * c, M + j * c, c);
            C[i * r + j] = v;
            C[j * r + i] = v;
        }
    }
}

void gram_t_avx2(const double* M, std::size_t r, std::size_t c, double* C) {
    std::memset(C, 0, c * c * sizeof(double));
    for (std::size_t l = 0; l < r; ++l) {
        const double* row = M + l * c;
        for (std::size_t i = 0; i < c; ++i) {
            if (row[i] != 0.0) axpy_avx2(row[i], row, C + i * c, c);
        }
    }
}

const Kernels kAvx2 = {
    "avx2",         dot_avx2,    l1_avx2,          l2sq_avx2,
    linf_avx2,      diff_l2sq_avx2, axpy_avx2,     soft_threshold_avx2,
    momentum_combine_avx2, gemv_n_avx2, gemv_t_avx2, residual_avx2,
    gemm_nn_avx2,   gram_n_avx2, gram_t_avx2,
};

}  // namespace

bool avx2_compiled() { return true; }
const Kernels* avx2() { return &kAvx2; }

}  // namespace lista::kernels
