#include "lista/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lista/core/linalg.hpp"
#include "lista/core/rng.hpp"
#include "lista/metrics.hpp"

namespace lista {

void CgSwitchConfig::validate() const {
    if (!(p_fraction > 0.0 && p_fraction <= 1.0))
        throw std::invalid_argument("cg: p_fraction must be in (0, 1]");
    if (stability_window < 1) throw std::invalid_argument("cg: stability_window must be >= 1");
    if (!(support_filter >= 0.0 && support_filter < 1.0))
        throw std::invalid_argument("cg: support_filter must be in [0, 1)");
    if (max_cg_iters < 0) throw std::invalid_argument("cg: max_cg_iters must be >= 0");
}

void HyperParams::validate() const {
    if (!(c1 > 0.0)) throw std::invalid_argument("hp: c1 must be > 0");
    if (!(c2 >= 0.0)) throw std::invalid_argument("hp: c2 must be >= 0");
    if (!(c3 >= 0.0 && c3 <= 1.0)) throw std::invalid_argument("hp: c3 must be in [0, 1]");
    if (layers < 0) throw std::invalid_argument("hp: layers must be >= 0");
    cg.validate();
}

Vector ista_step(const ProblemSetup& setup, std::span<const double> b,
                 std::span<const double> x, double lambda, double L) {
    if (!(L > 0.0)) throw std::invalid_argument("ista_step: L must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("ista_step: lambda must be >= 0");
    Vector r = residual(b, setup.A, x);
    Vector u = matvec_t(setup.A, r);
    Vector pre(x.size());
    kernels::active().momentum_combine(x.data(), x.data(), u.data(), 1.0 / L, 0.0, pre.data(),
                                       x.size());
    return soft_threshold(pre, lambda / L);
}

double power_iteration_lmax(const Matrix& A, double tol, std::size_t max_iters) {
    Rng rng(0x9e3779b97f4a7c15ULL);  // fixed internal seed: deterministic
    Vector v(A.cols());
    for (double& x : v) x = rng.normal();
    double nrm = l2_norm(v);
    for (double& x : v) x /= nrm;
    double lambda_prev = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        Vector av = matvec(A, v);
        Vector w = matvec_t(A, av);
        const double lambda = dot(v, w);  // Rayleigh quotient (v unit)
        const double wn = l2_norm(w);
        if (wn == 0.0) return 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / wn;
        if (it > 0 && std::fabs(lambda - lambda_prev) <= tol * std::fabs(lambda)) return lambda;
        lambda_prev = lambda;
    }
    return lambda_prev;
}

Vector momentum_step(const ProblemSetup& setup, std::span<const double> b,
                     std::span<const double> x_k, std::span<const double> x_km1,
                     const LayerParams& params, int k) {
    Vector r = residual(b, setup.A, x_k);
    Vector u = matvec_t(setup.W, r);
    Vector pre(x_k.size());
    const double beta = k == 0 ? 0.0 : params.beta;
    kernels::active().momentum_combine(x_k.data(), x_km1.data(), u.data(), params.gamma, beta,
                                       pre.data(), x_k.size());
    return support_select_threshold(pre, {params.theta, params.p});
}

namespace {

LayerParams adaptive_from_residual(const ProblemSetup& setup, std::span<const double> x,
                                   std::span<const double> r /* b - Ax */, double apb_l1,
                                   const HyperParams& hp, int k) {
    const auto n = static_cast<int>(setup.n);
    LayerParams out;
    out.gamma = 1.0;
    if (apb_l1 == 0.0) return out;  // zero observation: theta = beta = 0, p = 0

    Vector t = matvec(setup.A_pinv, r);  // |A^+(Ax-b)| == |A^+ r| entrywise
    const double res1 = l1_norm(t);
    out.beta = k == 0 ? 0.0 : hp.c2 * setup.mu * static_cast<double>(count_nonzero(x));
    if (!(res1 > 1e-300 * apb_l1)) {  // vanished residual: full trust
        out.theta = 0.0;
        out.p = n;
        return out;
    }
    out.theta = hp.c1 * setup.mu * out.gamma * res1;
    const double log_ratio = std::log(apb_l1 / res1);
    double praw;
    if (hp.p_formula == PFormula::count) {
        praw = hp.c3 * std::min(log_ratio, static_cast<double>(n));
    } else {
        praw = std::min(hp.c3 * log_ratio, 1.0) * static_cast<double>(n);
    }
    const auto p = static_cast<long long>(std::llround(praw));
    out.p = static_cast<int>(std::clamp<long long>(p, 0, n));
    return out;
}

struct CgCore {
    int iterations = 0;
    bool breakdown = false;
    double residual_l2 = 0.0;
};

// CG on Q xs = rhs, callback after each accepted iterate.
template <typename Cb>
CgCore cg_solve(const Matrix& Q, const Vector& rhs, Vector& xs, int max_iters, double tol,
                Cb&& cb) {
    const std::size_t s = rhs.size();
    CgCore out;
    Vector r(s), d(s), qd(s);
    kernels::active().residual(Q.data(), s, s, xs.data(), rhs.data(), r.data());
    d = r;
    double rs = l2_norm_sq(r);
    const double rhs_norm = l2_norm(rhs);
    const double stop = std::max(tol, 0.0) * rhs_norm;
    for (int it = 0; it < max_iters; ++it) {
        if (std::sqrt(rs) <= stop) break;
        qd = matvec(Q, d);
        const double dqd = dot(d, qd);
        if (!(dqd > 0.0)) {
            out.breakdown = true;
            break;
        }
        const double alpha = rs / dqd;
        axpy(alpha, d, xs);
        axpy(-alpha, qd, r);
        const double rs_new = l2_norm_sq(r);
        ++out.iterations;
        if (!cb(xs)) break;
        if (std::sqrt(rs_new) <= stop || rs_new <= 1e-32 * rhs_norm * rhs_norm) {
            rs = rs_new;
            break;
        }
        const double ratio = rs_new / rs;
        for (std::size_t i = 0; i < s; ++i) d[i] = r[i] + ratio * d[i];
        rs = rs_new;
    }
    out.residual_l2 = std::sqrt(rs);
    return out;
}

std::string params_to_string(const LayerParams& p) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "theta=%.6g gamma=%.6g beta=%.6g p=%d", p.theta, p.gamma,
                  p.beta, p.p);
    return buf;
}

struct EngineSink {
    RecoveryTrace* trace = nullptr;
    const IterateObserver* observer = nullptr;

    void emit(int idx, const Vector& x, Phase phase, bool is_start) {
        if (trace) {
            trace->iterates.push_back(x);
            if (!is_start) trace->phase_labels.push_back(phase);
        }
        if (observer && *observer) (*observer)(idx, x, phase);
    }
};

Vector engine_run(const ProblemSetup& setup, std::span<const double> b, const HyperParams& hp,
                  ScheduleMode mode, std::span<const LayerParams> schedule,
                  const Vector* x_star, EngineSink sink) {
    hp.validate();
    if (mode == ScheduleMode::fixed && schedule.size() != static_cast<std::size_t>(hp.layers))
        throw std::invalid_argument("run: fixed mode needs one LayerParams per layer");
    if (mode == ScheduleMode::adaptive && setup.A_pinv.empty())
        throw std::invalid_argument("run: adaptive mode needs A_pinv in the setup");
    if (setup.W.empty()) throw std::invalid_argument("run: setup has no analytic weight W");
    if (hp.cg.stop_nmse_db && !x_star)
        throw std::invalid_argument("run: stop_nmse_db needs the ground truth");

    const std::size_t n = setup.n;
    const CgSwitchConfig& cg = hp.cg;
    Vector x(n, 0.0), xprev(n, 0.0), pre(n), r;
    std::vector<int> scratch;
    double apb_l1 = 0.0;
    if (mode == ScheduleMode::adaptive) apb_l1 = l1_norm(matvec(setup.A_pinv, b));

    sink.emit(0, x, Phase::unrolled, /*is_start=*/true);
    auto stop_hit = [&](const Vector& cur) {
        return cg.stop_nmse_db && nmse_db(cur, *x_star) <= *cg.stop_nmse_db;
    };

    IndexSet s_prev;
    int streak = 0;
    bool fire = false;

    for (int k = 0; k < hp.layers; ++k) {
        r = residual(b, setup.A, x);
        LayerParams params = mode == ScheduleMode::adaptive
                                 ? adaptive_from_residual(setup, x, r, apb_l1, hp, k)
                                 : schedule[static_cast<std::size_t>(k)];
        const double beta = k == 0 ? 0.0 : params.beta;
        params.beta = beta;  // trace records the applied value
        Vector u = matvec_t(setup.W, r);
        kernels::active().momentum_combine(x.data(), xprev.data(), u.data(), params.gamma, beta,
                                           pre.data(), n);
        xprev.swap(x);
        support_select_threshold_inplace(pre, {params.theta, params.p}, x, scratch);
        if (!all_finite(x))
            throw SolverDivergence("non-finite iterate at layer " + std::to_string(k) + " (" +
                                   params_to_string(params) + ")");
        if (sink.trace) sink.trace->params.push_back(params);
        sink.emit(k + 1, x, Phase::unrolled, false);
        if (stop_hit(x)) return x;

        switch (cg.mode) {
            case CgMode::off:
                break;
            case CgMode::p_threshold:
                fire = static_cast<double>(params.p) >= cg.p_fraction * static_cast<double>(n);
                break;
            case CgMode::support_stable: {
                IndexSet s = estimate_support(x, cg.support_filter);
                if (!s.empty() && s == s_prev)
                    ++streak;
                else
                    streak = 0;
                s_prev = std::move(s);
                fire = streak >= cg.stability_window;
                break;
            }
        }
        if (!fire) continue;

        IndexSet support = estimate_support(x, cg.support_filter);
        if (support.empty()) {
            if (sink.trace) sink.trace->empty_support_warning = true;
            return x;
        }
        if (sink.trace) sink.trace->cg_switch_layer = k + 1;
        const auto s = static_cast<int>(support.size());
        Matrix As = select_columns(setup.A, support);
        Matrix Ws = select_columns(setup.W, support);
        Matrix Q(support.size(), support.size());
        {
            // Q = Ws^T As
            Matrix WsT(Ws.cols(), Ws.rows());
            for (std::size_t i = 0; i < Ws.rows(); ++i)
                for (std::size_t j = 0; j < Ws.cols(); ++j) WsT(j, i) = Ws(i, j);
            Q = matmul(WsT, As);
        }
        Vector rhs = matvec_t(Ws, b);
        Vector xs(support.size());
        for (std::size_t i = 0; i < support.size(); ++i)
            xs[i] = x[static_cast<std::size_t>(support[i])];
        const int iters = cg.max_cg_iters > 0 ? cg.max_cg_iters : s;
        Vector full(n, 0.0);
        int idx = k + 1;
        bool stopped = false;
        CgCore core = cg_solve(Q, rhs, xs, iters, 0.0, [&](const Vector& cur) {
            std::fill(full.begin(), full.end(), 0.0);
            for (std::size_t i = 0; i < support.size(); ++i)
                full[static_cast<std::size_t>(support[i])] = cur[i];
            sink.emit(++idx, full, Phase::cg, false);
            if (stop_hit(full)) {
                stopped = true;
                return false;
            }
            return true;
        });
        if (sink.trace) sink.trace->cg_breakdown_warning = core.breakdown;
        if (core.iterations > 0 || stopped) {
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t i = 0; i < support.size(); ++i)
                x[static_cast<std::size_t>(support[i])] = xs[i];
        }
        return x;
    }
    return x;
}

}  // namespace

LayerParams adaptive_params(const ProblemSetup& setup, std::span<const double> x,
                            std::span<const double> b, double apb_l1, const HyperParams& hp,
                            int k) {
    Vector r = residual(b, setup.A, x);
    return adaptive_from_residual(setup, x, r, apb_l1, hp, k);
}

IndexSet estimate_support(std::span<const double> x, double filter_ratio) {
    if (!(filter_ratio >= 0.0 && filter_ratio < 1.0))
        throw std::invalid_argument("estimate_support: filter_ratio must be in [0, 1)");
    const double mx = linf_norm(x);
    IndexSet out;
    if (mx == 0.0) return out;
    const double cut = filter_ratio * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::fabs(x[i]) > cut) out.push_back(static_cast<int>(i));
    return out;
}

CgResult cg_refine(const ProblemSetup& setup, std::span<const double> b,
                   std::span<const double> x_init, const IndexSet& support, int max_iters,
                   double tol) {
    if (support.empty()) throw std::invalid_argument("cg_refine: empty support");
    Matrix As = select_columns(setup.A, support);
    Matrix Ws = select_columns(setup.W, support);
    Matrix WsT(Ws.cols(), Ws.rows());
    for (std::size_t i = 0; i < Ws.rows(); ++i)
        for (std::size_t j = 0; j < Ws.cols(); ++j) WsT(j, i) = Ws(i, j);
    Matrix Q = matmul(WsT, As);
    Vector rhs = matvec_t(Ws, b);
    Vector xs(support.size());
    for (std::size_t i = 0; i < support.size(); ++i)
        xs[i] = x_init[static_cast<std::size_t>(support[i])];
    const int iters = max_iters > 0 ? max_iters : static_cast<int>(support.size());
    CgCore core = cg_solve(Q, rhs, xs, iters, tol, [](const Vector&) { return true; });
    CgResult out;
    out.iterations = core.iterations;
    out.breakdown = core.breakdown;
    out.residual_l2 = core.residual_l2;
    out.x.assign(x_init.size(), 0.0);
    for (std::size_t i = 0; i < support.size(); ++i)
        out.x[static_cast<std::size_t>(support[i])] = xs[i];
    return out;
}

RecoveryTrace run_unrolled(const ProblemSetup& setup, const Instance& instance,
                           const HyperParams& hp, ScheduleMode mode,
                           std::span<const LayerParams> schedule, const Vector* x_star_for_stop) {
    RecoveryTrace trace;
    EngineSink sink;
    sink.trace = &trace;
    engine_run(setup, instance.b, hp, mode, schedule,
               x_star_for_stop ? x_star_for_stop : &instance.x_star, sink);
    return trace;
}

RecoveryTrace run_hyperlista(const ProblemSetup& setup, const Instance& instance,
                             const HyperParams& hp) {
    return run_unrolled(setup, instance, hp, ScheduleMode::adaptive);
}

Vector run_final(const ProblemSetup& setup, std::span<const double> b, const HyperParams& hp,
                 ScheduleMode mode, std::span<const LayerParams> schedule,
                 const Vector* x_star_for_stop, const IterateObserver& observer) {
    EngineSink sink;
    sink.observer = &observer;
    return engine_run(setup, b, hp, mode, schedule, x_star_for_stop, sink);
}

void export_trace_csv(const std::string& path, const RecoveryTrace& trace,
                      std::span<const double> x_star) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "layer,nmse_db,theta,gamma,beta,p,phase\n";
    char buf[256];
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
        const double nmse = nmse_db(trace.iterates[i], x_star);
        const bool unrolled_layer =
            i >= 1 && trace.phase_labels[i - 1] == Phase::unrolled && i - 1 < trace.params.size();
        const char* phase =
            i == 0 ? "init" : (trace.phase_labels[i - 1] == Phase::cg ? "cg" : "unrolled");
        if (unrolled_layer) {
            const LayerParams& p = trace.params[i - 1];
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d,%s\n", i, nmse,
                          p.theta, p.gamma, p.beta, p.p, phase);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,,,,,%s\n", i, nmse, phase);
        }
        out << buf;
    }
}

void export_trace_json(const std::string& path, const RecoveryTrace& trace) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const auto& p : trace.params)
        j["layers"].push_back(
            {{"theta", p.theta}, {"gamma", p.gamma}, {"beta", p.beta}, {"p", p.p}});
    if (trace.cg_switch_layer)
        j["cg_switch_layer"] = *trace.cg_switch_layer;
    else
        j["cg_switch_layer"] = nullptr;
    j["total_iterates"] = trace.iterates.size();
    j["empty_support_warning"] = trace.empty_support_warning;
    j["cg_breakdown_warning"] = trace.cg_breakdown_warning;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace lista
