#pragma once

#include <string>
#include <vector>

#include "lista/problems.hpp"

namespace lista {

/// Alternating dictionary solver configuration. "Close enough" for the inner
/// (fixed-penalty) phase is a relative change in f1 between consecutive
/// iterations; for the outer stop it is the relative f1-f2 gap.
struct DictSolverConfig {
    double zeta0 = 0.1;          // initial PGD step size
    double alpha0 = 0.1;         // initial penalty weight
    double shrink_factor = 0.1;  // multiplicative decay for alpha and zeta
    double inner_tol = 1e-6;
    double outer_tol = 1e-4;
    std::size_t max_iters = 200000;

    void validate() const;
};

struct DictSolveReport {
    Matrix D;  // m x n, unit columns
    Matrix G;  // m x m
    std::vector<double> f1_history;  // ||D^T D - I||_F^2 per iteration
    std::vector<double> f2_history;  // ||(GA)^T GA - I||_F^2 per iteration
    std::vector<double> alpha_history;
    std::vector<double> zeta_history;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Alternation: projected-gradient step on D (columns renormalized each
/// step), closed-form G = D A^+, with alpha and zeta shrunk once f1
/// plateaus; stops when f1 and f2 agree within outer_tol. A non-finite step
/// halves zeta and retries (error after 50 consecutive halvings); hitting
/// max_iters returns converged = false.
DictSolveReport solve_dictionary(const Matrix& A, const DictSolverConfig& config = {});

/// max over off-diagonal |(D^T D)_{i,j}|. Requires >= 2 columns.
double mutual_coherence(const Matrix& D);

struct BuildResult {
    ProblemSetup setup;
    DictSolveReport report;
};

/// Runs the dictionary solver and assembles the full ProblemSetup:
/// W = (G^T G) A, D, G, mu, A_pinv. Requires unit-norm columns of A and
/// verifies that W^T A is symmetric.
BuildResult build_setup(const Matrix& A, const DictSolverConfig& config = {});

void export_dict_history_csv(const std::string& path, const DictSolveReport& report);

}  // namespace lista
