#include "lista/dictionary.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lista/core/linalg.hpp"

namespace lista {

void DictSolverConfig::validate() const {
    if (!(zeta0 > 0.0) || !(alpha0 > 0.0))
        throw std::invalid_argument("dict solver: zeta0 and alpha0 must be > 0");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
        throw std::invalid_argument("dict solver: shrink_factor must be in (0, 1)");
    if (!(inner_tol > 0.0) || !(outer_tol > 0.0))
        throw std::invalid_argument("dict solver: tolerances must be > 0");
    if (max_iters == 0) throw std::invalid_argument("dict solver: max_iters must be > 0");
}

namespace {

// f = ||M^T M - I||_F^2 computed from the m x m Gram Q = M M^T:
// tr((M^T M)^2) = ||Q||_F^2 and tr(M^T M) = tr(Q).
double frob_gap_from_rows_gram(const Matrix& Q, std::size_t n) {
    double fro2 = 0.0, tr = 0.0;
    for (std::size_t i = 0; i < Q.rows(); ++i) {
        tr += Q(i, i);
        fro2 += l2_norm_sq(Q.row(i));
    }
    return fro2 - 2.0 * tr + static_cast<double>(n);
}

// column norms of a row-major matrix via row sweeps
std::vector<double> column_norms(const Matrix& M) {
    std::vector<double> sq(M.cols(), 0.0);
    for (std::size_t i = 0; i < M.rows(); ++i) {
        auto row = M.row(i);
        for (std::size_t j = 0; j < M.cols(); ++j) sq[j] += row[j] * row[j];
    }
    for (double& v : sq) v = std::sqrt(v);
    return sq;
}

bool normalize_columns(Matrix& M) {
    const auto norms = column_norms(M);
    for (double v : norms)
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    for (std::size_t i = 0; i < M.rows(); ++i) {
        auto row = M.row(i);
        for (std::size_t j = 0; j < M.cols(); ++j) row[j] /= norms[j];
    }
    return true;
}

}  // namespace

DictSolveReport solve_dictionary(const Matrix& A, const DictSolverConfig& config) {
    config.validate();
    const std::size_t m = A.rows(), n = A.cols();
    const Matrix A_pinv = pseudoinverse(A);

    DictSolveReport rep;
    rep.D = A;
    rep.G = Matrix::identity(m);
    Matrix GA = matmul(rep.G, A);
    Matrix Q = gram_rows(rep.D);  // D D^T, reused for the step and for f1

    double zeta = config.zeta0, alpha = config.alpha0;
    double f1_prev = 0.0;
    bool have_prev = false;
    int halvings = 0;

    while (rep.iterations < config.max_iters) {
        // trial step: D_next = P(D - zeta*(Q D - D) - (zeta/alpha)*(D - GA))
        Matrix trial = matmul(Q, rep.D);  // (D D^T) D = D (D^T D)
        const double ca = zeta / alpha;
        for (std::size_t i = 0; i < m; ++i) {
            auto t = trial.row(i);
            auto d = rep.D.row(i);
            auto ga = GA.row(i);
            for (std::size_t j = 0; j < n; ++j)
                t[j] = d[j] - zeta * (t[j] - d[j]) - ca * (d[j] - ga[j]);
        }
        if (!all_finite({trial.data(), trial.size()}) || !normalize_columns(trial)) {
            if (++halvings > 50)
                throw std::runtime_error("dict solver: step diverged after 50 zeta halvings");
            zeta *= 0.5;
            continue;
        }

        Matrix Q_trial = gram_rows(trial);
        const double f1 = frob_gap_from_rows_gram(Q_trial, n);
        if (!std::isfinite(f1)) {
            if (++halvings > 50)
                throw std::runtime_error("dict solver: objective diverged after 50 zeta halvings");
            zeta *= 0.5;
            continue;
        }
        halvings = 0;

        rep.D = std::move(trial);
        Q = std::move(Q_trial);
        rep.G = matmul(rep.D, A_pinv);
        GA = matmul(rep.G, A);
        const double f2 = frob_gap_from_rows_gram(gram_rows(GA), n);

        rep.f1_history.push_back(f1);
        rep.f2_history.push_back(f2);
        rep.alpha_history.push_back(alpha);
        rep.zeta_history.push_back(zeta);
        ++rep.iterations;

        if (have_prev) {
            const double rel = std::fabs(f1 - f1_prev) / std::max(f1_prev, 1e-12);
            if (rel < config.inner_tol) {
                alpha *= config.shrink_factor;
                zeta *= config.shrink_factor;
                if (std::fabs(f1 - f2) <= config.outer_tol * std::max(f1, 1e-12)) {
                    rep.converged = true;
                    break;
                }
            }
        }
        f1_prev = f1;
        have_prev = true;
    }
    return rep;
}

double mutual_coherence(const Matrix& D) {
    if (D.cols() < 2)
        throw std::invalid_argument("mutual_coherence: needs at least two columns");
    Matrix gram = gram_cols(D);
    double mu = 0.0;
    for (std::size_t i = 0; i < gram.rows(); ++i)
        for (std::size_t j = 0; j < gram.cols(); ++j)
            if (i != j) mu = std::max(mu, std::fabs(gram(i, j)));
    return mu;
}

BuildResult build_setup(const Matrix& A, const DictSolverConfig& config) {
    const auto norms = column_norms(A);
    for (double v : norms)
        if (std::fabs(v - 1.0) > 1e-10)
            throw std::invalid_argument("build_setup: A must have unit-norm columns");

    BuildResult out;
    out.report = solve_dictionary(A, config);
    out.setup.m = A.rows();
    out.setup.n = A.cols();
    out.setup.A = A;
    out.setup.D = out.report.D;
    out.setup.G = out.report.G;
    out.setup.W = matmul(gram_cols(out.setup.G), A);  // (G^T G) A
    out.setup.mu = mutual_coherence(out.setup.D);
    out.setup.A_pinv = pseudoinverse(A);

    // W^T A = (GA)^T (GA) algebraically; verify symmetry up to rounding
    Matrix Wt(out.setup.W.cols(), out.setup.W.rows());
    for (std::size_t i = 0; i < out.setup.W.rows(); ++i)
        for (std::size_t j = 0; j < out.setup.W.cols(); ++j) Wt(j, i) = out.setup.W(i, j);
    Matrix WtA = matmul(Wt, A);
    double asym = 0.0, total = 0.0;
    for (std::size_t i = 0; i < WtA.rows(); ++i)
        for (std::size_t j = 0; j < WtA.cols(); ++j) {
            const double d = WtA(i, j) - WtA(j, i);
            asym += d * d;
            total += WtA(i, j) * WtA(i, j);
        }
    if (total > 0.0 && std::sqrt(asym / total) > 1e-8)
        throw std::logic_error("build_setup: W^T A asymmetry exceeds 1e-8");
    return out;
}

void export_dict_history_csv(const std::string& path, const DictSolveReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iter,f1,f2,alpha,zeta\n";
    char buf[128];
    for (std::size_t i = 0; i < report.f1_history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i,
                      report.f1_history[i], report.f2_history[i], report.alpha_history[i],
                      report.zeta_history[i]);
        out << buf;
    }
}

}  // namespace lista
