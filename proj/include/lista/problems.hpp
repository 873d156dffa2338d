#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lista/core/types.hpp"

namespace lista {

/// Measurement model b = A x* + eps together with the matrices derived from
/// A: the Moore-Penrose pseudoinverse, the symmetric analytic weight
/// W = (G^T G) A, the dictionary-solver outputs D (~ GA, unit columns) and G,
/// and the generalized mutual coherence mu = max off-diagonal |D^T D|.
/// Immutable once built; safe to share across threads.
struct ProblemSetup {
    std::size_t m = 0;
    std::size_t n = 0;
    Matrix A;       // m x n, unit l2 columns
    Matrix A_pinv;  // n x m
    Matrix W;       // m x n
    Matrix D;       // m x n
    Matrix G;       // m x m
    double mu = 0.0;

    bool has_weights() const { return !W.empty(); }
};

struct Instance {
    Vector x_star;   // length n
    Vector epsilon;  // length m
    Vector b;        // length m, b = A x_star + epsilon
};

enum class NonzeroMode { gaussian, constant };

struct GenConfig {
    std::size_t m = 250;
    std::size_t n = 500;
    double sparsity_p = 0.1;         // Bernoulli probability of a nonzero
    double magnitude_sigma = 1.0;    // stddev of nonzero magnitudes (gaussian mode)
    std::optional<double> snr_db;    // nullopt = noiseless
    NonzeroMode nonzero_mode = NonzeroMode::gaussian;
    double constant_value = 1.0;     // nonzero value in constant mode
    std::uint64_t seed = 0;
    std::size_t count = 1;

    void validate() const;  // throws std::invalid_argument
};

/// i.i.d. standard normal entries, then each column scaled to unit l2 norm.
/// Deterministic under seed; a zero column (probability zero) is resampled.
Matrix generate_dictionary(std::size_t m, std::size_t n, std::uint64_t seed);

/// Support drawn entrywise Bernoulli(p); nonzeros N(0, sigma^2) or the
/// constant; eps scaled per instance so ||Ax*||^2 / ||eps||^2 hits snr_db
/// exactly (zero in noiseless mode). Instances whose x* comes out all zero
/// (or with Ax* = 0 when noise is requested) are regenerated.
std::vector<Instance> generate_instances(const Matrix& A, const GenConfig& cfg);

/// A A^T-free SVD pseudoinverse; singular values below 1e-12 * sigma_max are
/// treated as zero.
Matrix pseudoinverse(const Matrix& a);

}  // namespace lista
