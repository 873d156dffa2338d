#include "lista/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

#include "lista/core/linalg.hpp"
#include "lista/core/rng.hpp"

namespace lista {

void GenConfig::validate() const {
    if (m == 0 || n == 0) throw std::invalid_argument("gen: dimensions must be positive");
    if (!(sparsity_p > 0.0 && sparsity_p < 1.0))
        throw std::invalid_argument("gen: sparsity_p must be in (0, 1)");
    if (nonzero_mode == NonzeroMode::gaussian && !(magnitude_sigma > 0.0))
        throw std::invalid_argument("gen: magnitude_sigma must be > 0 in gaussian mode");
    if (count == 0) throw std::invalid_argument("gen: count must be positive");
}

Matrix generate_dictionary(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (m == 0 || n == 0) throw std::invalid_argument("generate_dictionary: empty dims");
    Rng rng(seed);
    Matrix a(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal();
    for (std::size_t j = 0; j < n; ++j) {
        double nrm;
        for (;;) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
            nrm = std::sqrt(s);
            if (nrm > 0.0) break;
            for (std::size_t i = 0; i < m; ++i) a(i, j) = rng.normal();
        }
        for (std::size_t i = 0; i < m; ++i) a(i, j) /= nrm;
    }
    return a;
}

std::vector<Instance> generate_instances(const Matrix& A, const GenConfig& cfg) {
    cfg.validate();
    if (A.rows() != cfg.m || A.cols() != cfg.n)
        throw std::invalid_argument("generate_instances: A dims do not match config");
    Rng rng(cfg.seed);
    const std::size_t m = cfg.m, n = cfg.n;
    std::vector<Instance> out;
    out.reserve(cfg.count);
    for (std::size_t inst = 0; inst < cfg.count; ++inst) {
        Instance cur;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000)
                throw std::runtime_error("generate_instances: could not draw a usable x*");
            cur.x_star.assign(n, 0.0);
            bool any = false;
            for (std::size_t j = 0; j < n; ++j) {
                if (rng.uniform() < cfg.sparsity_p) {
                    cur.x_star[j] = cfg.nonzero_mode == NonzeroMode::constant
                                        ? cfg.constant_value
                                        : cfg.magnitude_sigma * rng.normal();
                    if (cur.x_star[j] != 0.0) any = true;
                }
            }
            if (!any) continue;  // zero signal: resample
            Vector ax = matvec(A, cur.x_star);
            const double ax_sq = l2_norm_sq(ax);
            cur.epsilon.assign(m, 0.0);
            if (cfg.snr_db) {
                if (ax_sq == 0.0) continue;  // SNR undefined; same regeneration path
                double e_sq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    cur.epsilon[i] = rng.normal();
                    e_sq += cur.epsilon[i] * cur.epsilon[i];
                }
                if (e_sq == 0.0) continue;
                const double scale = std::sqrt(ax_sq / (e_sq * std::pow(10.0, *cfg.snr_db / 10.0)));
                for (double& e : cur.epsilon) e *= scale;
            }
            cur.b = std::move(ax);
            for (std::size_t i = 0; i < m; ++i) cur.b[i] += cur.epsilon[i];
            break;
        }
        out.push_back(std::move(cur));
    }
    return out;
}

Matrix pseudoinverse(const Matrix& a) {
    using Emat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Emat> ea(a.data(), static_cast<Eigen::Index>(a.rows()),
                              static_cast<Eigen::Index>(a.cols()));
    Eigen::BDCSVD<Emat> svd(ea, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() ? sv(0) : 0.0);
    Eigen::VectorXd inv(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
    Emat pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    Matrix out(a.cols(), a.rows());
    Eigen::Map<Emat>(out.data(), pinv.rows(), pinv.cols()) = pinv;
    return out;
}

}  // namespace lista
