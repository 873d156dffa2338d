#include "lista/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lista/core/linalg.hpp"
#include "lista/core/parallel.hpp"
#include "lista/core/sha256.hpp"

namespace lista {

double nmse_db(std::span<const double> x_hat, std::span<const double> x_star) {
    const double den = l2_norm_sq(x_star);
    if (den == 0.0) throw std::invalid_argument("nmse_db: x_star is zero");
    const double num = diff_l2_sq(x_hat, x_star);
    if (num == 0.0) return kNmseFloorDb;
    const double db = 10.0 * std::log10(num / den);
    return std::clamp(db, kNmseFloorDb, kNmseCeilDb);
}

const char* to_string(MeanConvention c) {
    return c == MeanConvention::db_of_mean_ratio ? "db_of_mean_ratio" : "mean_of_db";
}

namespace {

double clamp_db(double db) { return std::clamp(db, kNmseFloorDb, kNmseCeilDb); }

/// Accumulates per-layer error ratios (or dBs) across instances.
class CurveAccum {
public:
    CurveAccum(std::size_t layers, std::size_t instances, MeanConvention conv)
        : conv_(conv), cells_(layers + 1, std::vector<double>(instances, 0.0)) {}

    void record(std::size_t inst, std::size_t layer, std::span<const double> x,
                std::span<const double> x_star) {
        const double den = l2_norm_sq(x_star);
        const double ratio = den > 0.0 ? diff_l2_sq(x, x_star) / den : 1.0;
        store(inst, layer, ratio);
    }
    void record_ratio(std::size_t inst, std::size_t layer, double ratio) {
        store(inst, layer, ratio);
    }
    /// Instances that stop early keep their final value through later layers.
    void pad(std::size_t inst, std::size_t from_layer) {
        for (std::size_t l = from_layer + 1; l < cells_.size(); ++l)
            cells_[l][inst] = cells_[from_layer][inst];
    }

    std::vector<double> finish() const {
        std::vector<double> out(cells_.size());
        for (std::size_t l = 0; l < cells_.size(); ++l) {
            double acc = 0.0;
            for (double v : cells_[l]) acc += v;
            acc /= static_cast<double>(cells_[l].size());
            out[l] = conv_ == MeanConvention::db_of_mean_ratio
                         ? clamp_db(10.0 * std::log10(std::max(acc, 1e-32)))
                         : acc;
        }
        return out;
    }

private:
    void store(std::size_t inst, std::size_t layer, double ratio) {
        if (!std::isfinite(ratio)) ratio = 1.0;
        cells_[layer][inst] = conv_ == MeanConvention::db_of_mean_ratio
                                  ? ratio
                                  : clamp_db(10.0 * std::log10(std::max(ratio, 1e-32)));
    }
    MeanConvention conv_;
    std::vector<std::vector<double>> cells_;  // [layer][instance]
};

GenConfig shifted(const GenConfig& base, int seed_offset) {
    GenConfig g = base;
    g.seed = base.seed + static_cast<std::uint64_t>(seed_offset);
    return g;
}

}  // namespace

MetricCurve mean_curve(std::span<const RecoveryTrace> traces, std::span<const Instance> instances,
                       MeanConvention convention) {
    if (traces.size() != instances.size())
        throw std::invalid_argument("mean_curve: traces and instances differ in length");
    if (traces.empty()) throw std::invalid_argument("mean_curve: nothing to average");
    std::size_t layers = 0;
    for (const auto& t : traces) layers = std::max(layers, t.iterates.size() - 1);
    CurveAccum acc(layers, traces.size(), convention);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& it = traces[i].iterates;
        for (std::size_t l = 0; l < it.size(); ++l)
            acc.record(i, l, it[l], instances[i].x_star);
        acc.pad(i, it.size() - 1);
    }
    MetricCurve out;
    out.per_layer_nmse_db = acc.finish();
    out.convention = convention;
    return out;
}

FixedSchedule train_fixed_schedule(const ProblemSetup& setup, std::span<const Instance> tuning,
                                   const FixedTrainConfig& cfg, const std::string& label) {
    if (tuning.empty()) throw std::invalid_argument("train_fixed_schedule: no tuning instances");
    const std::size_t n = setup.n;
    const std::size_t N = tuning.size();
    const int p_rate = cfg.p_rate > 0 ? cfg.p_rate
                                      : std::max(1, static_cast<int>(std::lround(0.012 * n)));
    const int p_max =
        cfg.p_max > 0 ? cfg.p_max : static_cast<int>(std::lround(0.12 * static_cast<double>(n)));

    std::vector<double> theta_scales(static_cast<std::size_t>(cfg.theta_points));
    for (int i = 0; i < cfg.theta_points; ++i) {
        const double t = cfg.theta_points == 1
                             ? 0.0
                             : static_cast<double>(i) / static_cast<double>(cfg.theta_points - 1);
        theta_scales[static_cast<std::size_t>(i)] =
            cfg.theta_lo * std::pow(cfg.theta_hi / cfg.theta_lo, t);
    }

    auto batch_score = [&](const std::vector<Vector>& xs) {
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double den = l2_norm_sq(tuning[i].x_star);
            double ratio = den > 0.0 ? diff_l2_sq(xs[i], tuning[i].x_star) / den : 1.0;
            if (!std::isfinite(ratio)) ratio = 1.0;
            acc += cfg.convention == MeanConvention::db_of_mean_ratio
                       ? ratio
                       : clamp_db(10.0 * std::log10(std::max(ratio, 1e-32)));
        }
        acc /= static_cast<double>(N);
        return cfg.convention == MeanConvention::db_of_mean_ratio
                   ? clamp_db(10.0 * std::log10(std::max(acc, 1e-32)))
                   : acc;
    };

    FixedSchedule best;
    double best_final = std::numeric_limits<double>::infinity();
    std::vector<int> scratch;
    for (double bconst : cfg.beta_grid) {
        std::vector<Vector> X(N, Vector(n, 0.0)), Xp(N, Vector(n, 0.0));
        std::vector<Vector> R(N), U(N), T(N);
        FixedSchedule sched;
        sched.label = label;
        for (int k = 0; k < cfg.layers; ++k) {
            double scale_acc = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                R[i] = residual(tuning[i].b, setup.A, X[i]);
                T[i] = matvec(setup.A_pinv, R[i]);
                scale_acc += l1_norm(T[i]);
                U[i] = matvec_t(setup.W, R[i]);
            }
            const double scale = setup.mu * scale_acc / static_cast<double>(N);
            const double beta = k == 0 ? 0.0 : bconst;
            const int pk = std::min(p_rate * k, p_max);
            LayerParams chosen;
            double chosen_score = std::numeric_limits<double>::infinity();
            std::vector<Vector> chosen_out;
            std::vector<Vector> pre(N, Vector(n));
            std::vector<Vector> out(N, Vector(n));
            for (double g : cfg.gamma_grid) {
                for (std::size_t i = 0; i < N; ++i)
                    kernels::active().momentum_combine(X[i].data(), Xp[i].data(), U[i].data(), g,
                                                       beta, pre[i].data(), n);
                for (double ts : theta_scales) {
                    const double theta = ts * scale;
                    for (std::size_t i = 0; i < N; ++i)
                        support_select_threshold_inplace(pre[i], {theta, pk}, out[i], scratch);
                    const double s = batch_score(out);
                    if (s < chosen_score) {
                        chosen_score = s;
                        chosen = LayerParams{theta, g, beta, pk};
                        chosen_out = out;
                    }
                }
            }
            sched.layers.push_back(chosen);
            Xp = std::move(X);
            X = std::move(chosen_out);
        }
        const double final_score = batch_score(X);
        if (final_score < best_final) {
            best_final = final_score;
            best = std::move(sched);
        }
    }
    return best;
}

double mean_final_nmse(const ProblemSetup& setup, std::span<const Instance> instances,
                       const HyperParams& hp, MeanConvention convention, unsigned threads) {
    if (instances.empty()) throw std::invalid_argument("mean_final_nmse: no instances");
    std::vector<double> ratios(instances.size(), 1.0);
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        const Instance& inst = instances[i];
        double ratio = 1.0;
        try {
            Vector x = run_final(setup, inst.b, hp, ScheduleMode::adaptive, {},
                                 hp.cg.stop_nmse_db ? &inst.x_star : nullptr);
            const double den = l2_norm_sq(inst.x_star);
            ratio = den > 0.0 ? diff_l2_sq(x, inst.x_star) / den : 1.0;
            if (!std::isfinite(ratio)) ratio = 1.0;
        } catch (const SolverDivergence&) {
            ratio = 1.0;  // diverged instances score as the zero output
        }
        ratios[i] = ratio;
    });
    if (convention == MeanConvention::db_of_mean_ratio) {
        double acc = 0.0;
        for (double r : ratios) acc += r;
        return clamp_db(10.0 * std::log10(std::max(acc / static_cast<double>(ratios.size()), 1e-32)));
    }
    double acc = 0.0;
    for (double r : ratios) acc += clamp_db(10.0 * std::log10(std::max(r, 1e-32)));
    return acc / static_cast<double>(ratios.size());
}

std::string hp_fingerprint(const HyperParams& hp) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "c1=%.17g;c2=%.17g;c3=%.17g;K=%d;pf=%d", hp.c1, hp.c2, hp.c3,
                  hp.layers, hp.p_formula == PFormula::count ? 0 : 1);
    return Sha256::of_string(buf).substr(0, 16);
}

MetricCurve curve_hyperlista(const ProblemSetup& setup, std::span<const Instance> instances,
                             const HyperParams& hp, int layers, MeanConvention convention,
                             unsigned threads, const std::string& config_label) {
    HyperParams run_hp = hp;
    run_hp.layers = layers;
    CurveAccum acc(static_cast<std::size_t>(layers), instances.size(), convention);
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        const Instance& inst = instances[i];
        std::size_t last = 0;
        try {
            run_final(setup, inst.b, run_hp, ScheduleMode::adaptive, {},
                      run_hp.cg.stop_nmse_db ? &inst.x_star : nullptr,
                      [&](int idx, std::span<const double> x, Phase) {
                          const auto l = static_cast<std::size_t>(idx);
                          if (l <= static_cast<std::size_t>(layers)) {
                              acc.record(i, l, x, inst.x_star);
                              last = l;
                          }
                      });
        } catch (const SolverDivergence&) {
            if (last < static_cast<std::size_t>(layers)) acc.record_ratio(i, ++last, 1.0);
        }
        acc.pad(i, last);
    });
    MetricCurve out;
    out.per_layer_nmse_db = acc.finish();
    out.method_label = "hyperlista";
    out.config_label = config_label;
    out.convention = convention;
    out.hp_hash = hp_fingerprint(run_hp);
    return out;
}

MetricCurve curve_fixed(const ProblemSetup& setup, std::span<const Instance> instances,
                        const FixedSchedule& sched, int layers, MeanConvention convention,
                        unsigned threads, const std::string& config_label) {
    // extrapolation beyond the trained depth repeats the last layer
    std::vector<LayerParams> schedule(sched.layers.begin(), sched.layers.end());
    if (schedule.empty()) throw std::invalid_argument("curve_fixed: empty schedule");
    while (schedule.size() < static_cast<std::size_t>(layers)) schedule.push_back(schedule.back());
    schedule.resize(static_cast<std::size_t>(layers));
    HyperParams hp;
    hp.layers = layers;
    hp.cg.mode = CgMode::off;
    CurveAccum acc(static_cast<std::size_t>(layers), instances.size(), convention);
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        const Instance& inst = instances[i];
        std::size_t last = 0;
        try {
            run_final(setup, inst.b, hp, ScheduleMode::fixed, schedule, nullptr,
                      [&](int idx, std::span<const double> x, Phase) {
                          acc.record(i, static_cast<std::size_t>(idx), x, inst.x_star);
                          last = static_cast<std::size_t>(idx);
                      });
        } catch (const SolverDivergence&) {
            if (last < static_cast<std::size_t>(layers)) acc.record_ratio(i, ++last, 1.0);
        }
        acc.pad(i, last);
    });
    MetricCurve out;
    out.per_layer_nmse_db = acc.finish();
    out.method_label = sched.label;
    out.config_label = config_label;
    out.convention = convention;
    return out;
}

MetricCurve curve_ista(const ProblemSetup& setup, std::span<const Instance> instances,
                       const IstaSettings& ista, int layers, MeanConvention convention,
                       unsigned threads, const std::string& config_label) {
    const double L = power_iteration_lmax(setup.A);
    CurveAccum acc(static_cast<std::size_t>(layers), instances.size(), convention);
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        const Instance& inst = instances[i];
        Vector x(setup.n, 0.0);
        acc.record(i, 0, x, inst.x_star);
        for (int k = 0; k < layers; ++k) {
            x = ista_step(setup, inst.b, x, ista.lambda, L);
            acc.record(i, static_cast<std::size_t>(k + 1), x, inst.x_star);
        }
    });
    MetricCurve out;
    out.per_layer_nmse_db = acc.finish();
    out.method_label = "ista";
    out.config_label = config_label;
    out.convention = convention;
    return out;
}

std::vector<MetricCurve> run_adaptivity_suite(const ProblemSetup& setup, const MethodSet& methods,
                                              const SuiteConfig& cfg) {
    struct TestSet {
        std::string label;
        GenConfig gen;
    };
    GenConfig p_shift = shifted(cfg.matched_gen, 1);
    p_shift.sparsity_p = 0.15;
    GenConfig sigma_shift = shifted(cfg.matched_gen, 2);
    sigma_shift.magnitude_sigma = 2.0;
    GenConfig noise_shift = shifted(cfg.matched_gen, 3);
    noise_shift.snr_db = 30.0;
    const std::vector<TestSet> sets = {{"matched", cfg.matched_gen},
                                       {"sparsity_0.15", p_shift},
                                       {"sigma_2", sigma_shift},
                                       {"snr_30db", noise_shift}};
    std::vector<MetricCurve> out;
    for (const auto& ts : sets) {
        auto instances = generate_instances(setup.A, ts.gen);
        if (methods.hyperlista)
            out.push_back(curve_hyperlista(setup, instances, *methods.hyperlista, cfg.layers_test,
                                           cfg.convention, cfg.threads, ts.label));
        if (methods.alista_fixed)
            out.push_back(curve_fixed(setup, instances, *methods.alista_fixed, cfg.layers_test,
                                      cfg.convention, cfg.threads, ts.label));
        if (methods.alista_mm_fixed)
            out.push_back(curve_fixed(setup, instances, *methods.alista_mm_fixed, cfg.layers_test,
                                      cfg.convention, cfg.threads, ts.label));
        if (methods.ista)
            out.push_back(curve_ista(setup, instances, *methods.ista, cfg.layers_test,
                                     cfg.convention, cfg.threads, ts.label));
    }
    return out;
}

std::vector<MetricCurve> run_extrapolation(const ProblemSetup& setup, const MethodSet& methods,
                                           const SuiteConfig& cfg, int layers_train,
                                           int layers_test) {
    if (layers_test < 1 || layers_train < 1)
        throw std::invalid_argument("run_extrapolation: layer counts must be >= 1");
    auto instances = generate_instances(setup.A, cfg.matched_gen);
    std::vector<MetricCurve> out;
    if (methods.hyperlista)
        out.push_back(curve_hyperlista(setup, instances, *methods.hyperlista, layers_test,
                                       cfg.convention, cfg.threads, "extrapolate"));
    if (methods.alista_fixed) {
        FixedSchedule trimmed = *methods.alista_fixed;
        if (trimmed.layers.size() > static_cast<std::size_t>(layers_train))
            trimmed.layers.resize(static_cast<std::size_t>(layers_train));
        trimmed.label = trimmed.label + "_extra";
        out.push_back(curve_fixed(setup, instances, trimmed, layers_test, cfg.convention,
                                  cfg.threads, "extrapolate"));
    }
    return out;
}

SuperlinearReport run_superlinear_experiment(const ProblemSetup& setup,
                                             std::span<const Instance> instances,
                                             const SuperlinearConfig& cfg) {
    if (instances.empty()) throw std::invalid_argument("superlinear: no instances");
    SuperlinearReport rep;
    rep.switch_layers.assign(instances.size(), -1);
    rep.budgets.assign(instances.size(), 0);
    rep.final_nmse_db.assign(instances.size(), 0.0);
    std::vector<std::vector<double>> curves(instances.size());
    parallel_for(instances.size(), cfg.threads, [&](std::size_t i) {
        RecoveryTrace tr = run_unrolled(setup, instances[i], cfg.hp, ScheduleMode::adaptive);
        auto& c = curves[i];
        c.reserve(tr.iterates.size());
        for (const auto& x : tr.iterates) c.push_back(nmse_db(x, instances[i].x_star));
        rep.switch_layers[i] = tr.cg_switch_layer.value_or(-1);
        rep.budgets[i] = static_cast<int>(tr.iterates.size()) - 1;
        rep.final_nmse_db[i] = c.back();
    });
    std::size_t longest = 0;
    for (const auto& c : curves) longest = std::max(longest, c.size());
    CurveAccum acc(longest - 1, instances.size(), cfg.convention);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t l = 0; l < curves[i].size(); ++l)
            acc.record_ratio(i, l, std::pow(10.0, curves[i][l] / 10.0));
        acc.pad(i, curves[i].size() - 1);
    }
    rep.mean.per_layer_nmse_db = acc.finish();
    rep.mean.method_label = "hyperlista";
    rep.mean.config_label = "superlinear_mean";
    rep.mean.convention = cfg.convention;
    rep.mean.hp_hash = hp_fingerprint(cfg.hp);
    const std::size_t si = std::min(cfg.single_index, instances.size() - 1);
    rep.single.per_layer_nmse_db = curves[si];
    rep.single.method_label = "hyperlista";
    rep.single.config_label = "superlinear_single";
    rep.single.convention = cfg.convention;
    rep.single.hp_hash = rep.mean.hp_hash;
    return rep;
}

void export_curve_csv(const std::string& path, const MetricCurve& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# method=" << curve.method_label << " config=" << curve.config_label
        << " convention=" << to_string(curve.convention) << " hp=" << curve.hp_hash << '\n';
    out << "layer,nmse_db\n";
    char buf[64];
    for (std::size_t l = 0; l < curve.per_layer_nmse_db.size(); ++l) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", l, curve.per_layer_nmse_db[l]);
        out << buf;
    }
}

}  // namespace lista
