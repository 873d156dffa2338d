#pragma once

#include <cstddef>
#include <string_view>

namespace lista::kernels {

/// Table of the arithmetic inner loops. Every entry has a scalar reference
/// implementation and, on x86-64 with AVX2+FMA, a vectorized variant chosen
/// at runtime. Elementwise kernels (soft_threshold, momentum_combine,
/// residual-free vector ops) are bit-identical between variants; reductions
/// and matrix products may differ in the last bits (FMA, lane order).
struct Kernels {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*l1_norm)(const double* a, std::size_t n);
    double (*l2_norm_sq)(const double* a, std::size_t n);
    double (*linf_norm)(const double* a, std::size_t n);
    double (*diff_l2_sq)(const double* a, const double* b, std::size_t n);

    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out_i = sign(v_i) * max(|v_i| - theta, 0)
    void (*soft_threshold)(const double* v, double theta, double* out, std::size_t n);
    // out = x + gamma*u + beta*(x - xprev)
    void (*momentum_combine)(const double* x, const double* xprev, const double* u,
                             double gamma, double beta, double* out, std::size_t n);

    // Row-major dense A (r x c).
    void (*gemv_n)(const double* A, std::size_t r, std::size_t c, const double* x, double* y);  // y = A x
    void (*gemv_t)(const double* A, std::size_t r, std::size_t c, const double* x, double* y);  // y = A^T x
    void (*residual)(const double* A, std::size_t r, std::size_t c, const double* x,
                     const double* b, double* out);  // out = b - A x

    // C (r x n) = A (r x k) * B (k x n), all row-major, C overwritten.
    void (*gemm_nn)(const double* A, std::size_t r, std::size_t k, const double* B,
                    std::size_t n, double* C);
    // C (r x r) = M M^T for row-major M (r x c).
    void (*gram_n)(const double* M, std::size_t r, std::size_t c, double* C);
    // C (c x c) = M^T M for row-major M (r x c).
    void (*gram_t)(const double* M, std::size_t r, std::size_t c, double* C);
};

const Kernels& scalar();
bool avx2_compiled();
bool avx2_supported();
const Kernels* avx2();  // nullptr when not compiled in

/// Active table used by the rest of the library. Defaults to the best
/// supported variant; select() narrows it ("scalar", "avx2", "auto").
const Kernels& active();
void select(std::string_view which);  // throws std::invalid_argument on bad name

}  // namespace lista::kernels
