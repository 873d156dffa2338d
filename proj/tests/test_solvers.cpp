#include <doctest.h>

#include <cmath>
#include <random>

#include "lista/core/linalg.hpp"
#include "lista/dictionary.hpp"
#include "lista/eval.hpp"
#include "lista/solvers.hpp"
#include "support/oracles.hpp"

using namespace lista;

namespace {

// Shared 50x100 setup (built once; tests are read-only users).
const ProblemSetup& small_setup() {
    static BuildResult r = [] {
        auto A = generate_dictionary(50, 100, 101);
        return build_setup(A);
    }();
    return r.setup;
}

ProblemSetup identity_setup(std::size_t n) {
    ProblemSetup s;
    s.m = n;
    s.n = n;
    s.A = Matrix::identity(n);
    s.W = Matrix::identity(n);
    s.D = Matrix::identity(n);
    s.G = Matrix::identity(n);
    s.A_pinv = Matrix::identity(n);
    s.mu = 0.0;
    return s;
}

Instance noiseless_instance(const ProblemSetup& setup, std::uint64_t seed, double p = 0.1) {
    GenConfig cfg;
    cfg.m = setup.m;
    cfg.n = setup.n;
    cfg.sparsity_p = p;
    cfg.seed = seed;
    cfg.count = 1;
    return generate_instances(setup.A, cfg)[0];
}

}  // namespace

TEST_CASE("ista_step: fixed point and zero cases") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 5);
    const double L = power_iteration_lmax(s.A);
    CHECK(L > 1.0);

    auto out = ista_step(s, inst.b, inst.x_star, 0.0, L);
    CHECK(out == inst.x_star);  // zero residual, zero threshold

    Vector zero_b(s.m, 0.0), zero_x(s.n, 0.0);
    auto z = ista_step(s, zero_b, zero_x, 0.1, L);
    for (double v : z) CHECK(v == 0.0);

    CHECK_THROWS_AS(ista_step(s, inst.b, zero_x, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("ista: oracle run reaches -40 dB on a noiseless instance") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 8);
    const double L = power_iteration_lmax(s.A);
    Vector x(s.n, 0.0);
    for (int k = 0; k < 1000; ++k) x = ista_step(s, inst.b, x, 0.005, L);
    CHECK(nmse_db(x, inst.x_star) < -40.0);
}

TEST_CASE("momentum_step: beta = 0 equals the plain analytic step bit for bit") {
    const auto& s = small_setup();
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> d(-1, 1);
    int trials = 0;
    for (int t = 0; t < 200; ++t) {
        Vector x(s.n), xp(s.n), b(s.m);
        for (auto& v : x) v = d(g);
        for (auto& v : xp) v = d(g);
        for (auto& v : b) v = d(g);
        for (double theta : {0.0, 0.05, 0.3}) {
            for (int p : {0, 3, 25}) {
                LayerParams prm{theta, 1.0, 0.0, p};
                auto a = momentum_step(s, b, x, xp, prm, 1);
                // reference: same kernels, no momentum term at all
                Vector r = residual(b, s.A, x);
                Vector u = matvec_t(s.W, r);
                Vector pre(x);
                axpy(1.0, u, pre);
                auto ref = support_select_threshold(pre, {theta, p});
                REQUIRE(a == ref);
                ++trials;
            }
        }
    }
    CHECK(trials >= 1200);
}

TEST_CASE("momentum_step: x_k == x_km1 makes the output independent of beta") {
    const auto& s = small_setup();
    std::mt19937_64 g(78);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int t = 0; t < 10000; ++t) {
        Vector x(s.n), b(s.m);
        for (auto& v : x) v = d(g);
        for (auto& v : b) v = d(g);
        LayerParams lo{0.1, 1.0, 0.3, 2};
        LayerParams hi{0.1, 1.0, 0.9, 2};
        auto a = momentum_step(s, b, x, x, lo, 3);
        auto c = momentum_step(s, b, x, x, hi, 3);
        REQUIRE(a == c);
    }
}

TEST_CASE("momentum_step: identity dictionary recovers in one step") {
    auto s = identity_setup(16);
    Vector xstar(16, 0.0);
    xstar[2] = 1.5;
    xstar[9] = -0.7;
    Vector b = xstar;  // A = I, noiseless
    Vector x0(16, 0.0);
    auto out = momentum_step(s, b, x0, x0, {0.0, 1.0, 0.0, 0}, 0);
    CHECK(out == xstar);
}

TEST_CASE("adaptive_params: closed-form cases") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 21);
    const double apb = l1_norm(matvec(s.A_pinv, inst.b));
    HyperParams hp;
    hp.c1 = 0.3;
    hp.c2 = 0.2;
    hp.c3 = 0.7;

    SUBCASE("x = 0: theta = c1 mu ||A^+ b||_1, p = 0, beta = 0") {
        Vector x0(s.n, 0.0);
        auto prm = adaptive_params(s, x0, inst.b, apb, hp, 0);
        CHECK(prm.gamma == 1.0);
        CHECK(prm.beta == 0.0);
        CHECK(prm.p == 0);
        CHECK(prm.theta == doctest::Approx(hp.c1 * s.mu * apb).epsilon(1e-12));
    }

    SUBCASE("exact iterate: residual vanishes, full trust") {
        auto prm = adaptive_params(s, inst.x_star, inst.b, apb, hp, 4);
        CHECK(prm.theta == 0.0);
        CHECK(prm.p == static_cast<int>(s.n));
    }

    SUBCASE("c3 = 0 disables support selection at every layer") {
        HyperParams h0 = hp;
        h0.c3 = 0.0;
        std::mt19937_64 g(3);
        std::uniform_real_distribution<double> d(-1, 1);
        for (int k = 0; k < 8; ++k) {
            Vector x(s.n);
            for (auto& v : x) v = d(g);
            auto prm = adaptive_params(s, x, inst.b, apb, h0, k);
            CHECK(prm.p == 0);
        }
    }

    SUBCASE("zero observation") {
        Vector zb(s.m, 0.0), x0(s.n, 0.0);
        auto prm = adaptive_params(s, x0, zb, 0.0, hp, 2);
        CHECK(prm.theta == 0.0);
        CHECK(prm.beta == 0.0);
        CHECK(prm.p == 0);
    }

    SUBCASE("beta forced to zero at layer 0 only") {
        Vector x(s.n, 0.0);
        x[3] = 1.0;
        x[17] = -2.0;
        auto p0 = adaptive_params(s, x, inst.b, apb, hp, 0);
        auto p1 = adaptive_params(s, x, inst.b, apb, hp, 1);
        CHECK(p0.beta == 0.0);
        CHECK(p1.beta == doctest::Approx(hp.c2 * s.mu * 2.0));
    }
}

TEST_CASE("estimate_support") {
    CHECK(estimate_support(Vector{1.0, 0.05, 0.0}, 0.1) == IndexSet{0});
    CHECK(estimate_support(Vector(8, 0.0), 0.3).empty());
    CHECK(estimate_support(Vector{1.0, 0.2, -0.11}, 0.1) == IndexSet{0, 1, 2});
    // filter 0 keeps exact nonzeros
    CHECK(estimate_support(Vector{0.5, 0.0, -1e-300}, 0.0) == IndexSet{0, 2});
    CHECK_THROWS_AS(estimate_support(Vector{1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("cg_refine: identity system solves in one iteration") {
    auto s = identity_setup(12);
    Vector b(12, 0.0);
    b[1] = 2.0;
    b[5] = -1.0;
    Vector x0(12, 0.0);
    auto res = cg_refine(s, b, x0, {1, 5});
    CHECK(res.iterations == 1);
    CHECK(!res.breakdown);
    CHECK(res.x[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(res.x[5] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(res.x[0] == 0.0);
    CHECK_THROWS_AS(cg_refine(s, b, x0, {}), std::invalid_argument);
}

TEST_CASE("cg_refine: matches the dense direct solve") {
    std::mt19937_64 g(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 200, n = 300;
        static Matrix A = generate_dictionary(m, n, 606);
        ProblemSetup s;
        s.m = m;
        s.n = n;
        s.A = A;
        s.W = A;  // W = A gives the SPD Gram system
        std::uniform_int_distribution<int> sz(1, 40);
        const int sup = sz(g);
        IndexSet support;
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
        while (static_cast<int>(support.size()) < sup) {
            int c = pick(g);
            if (std::find(support.begin(), support.end(), c) == support.end())
                support.push_back(c);
        }
        std::sort(support.begin(), support.end());
        Vector b(m);
        std::uniform_real_distribution<double> d(-1, 1);
        for (auto& v : b) v = d(g);
        Vector x0(n, 0.0);
        auto res = cg_refine(s, b, x0, support);
        REQUIRE(!res.breakdown);

        Matrix As = select_columns(A, support);
        Matrix Q = gram_cols(As);
        Vector rhs = matvec_t(As, b);
        Vector xs = oracle::dense_solve(Q, rhs);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            const double d2 = res.x[static_cast<std::size_t>(support[i])] - xs[i];
            num += d2 * d2;
            den += xs[i] * xs[i];
        }
        CHECK(std::sqrt(num / std::max(den, 1e-30)) <= 1e-10);
    }
}

TEST_CASE("run_unrolled: depth zero and saturated threshold") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 31);

    HyperParams hp;
    hp.layers = 0;
    auto tr = run_unrolled(s, inst, hp, ScheduleMode::adaptive);
    REQUIRE(tr.iterates.size() == 1);
    for (double v : tr.iterates[0]) CHECK(v == 0.0);

    hp.layers = 12;
    hp.c1 = 1e6;  // threshold dominates: everything stays zero
    auto tz = run_hyperlista(s, inst, hp);
    CHECK(!tz.cg_switch_layer.has_value());
    for (const auto& x : tz.iterates)
        for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("run_unrolled: fixed mode needs a full schedule") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 32);
    HyperParams hp;
    hp.layers = 4;
    std::vector<LayerParams> sched(3);
    CHECK_THROWS_AS(run_unrolled(s, inst, hp, ScheduleMode::fixed, sched), std::invalid_argument);
}

TEST_CASE("run_unrolled: divergent fixed schedule raises a diagnostic") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 33);
    HyperParams hp;
    hp.layers = 600;
    hp.cg.mode = CgMode::off;
    std::vector<LayerParams> sched(600, LayerParams{0.0, 10.0, 0.0, 0});
    CHECK_THROWS_AS(run_unrolled(s, inst, hp, ScheduleMode::fixed, sched), SolverDivergence);
}

TEST_CASE("traces are deterministic") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 40);
    HyperParams hp;
    hp.c1 = 0.1;
    hp.c2 = 0.05;
    hp.c3 = 0.5;
    hp.layers = 16;
    auto a = run_hyperlista(s, inst, hp);
    auto b = run_hyperlista(s, inst, hp);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t i = 0; i < a.iterates.size(); ++i) REQUIRE(a.iterates[i] == b.iterates[i]);
}

TEST_CASE("adaptive run: p is nondecreasing from layer 1 on a converging instance") {
    const auto& s = small_setup();
    auto inst = noiseless_instance(s, 44);
    HyperParams hp;
    hp.c1 = 0.1;
    hp.c2 = 0.05;
    hp.c3 = 0.5;
    hp.layers = 16;
    auto tr = run_hyperlista(s, inst, hp);
    REQUIRE(tr.params.size() >= 2);
    // converging: final error far below start
    CHECK(nmse_db(tr.iterates.back(), inst.x_star) < -20.0);
    CHECK(tr.params.back().p >= tr.params[1].p);
}

TEST_CASE("momentum on beats momentum off at matched c1, c3") {
    const auto& s = small_setup();
    GenConfig cfg;
    cfg.m = s.m;
    cfg.n = s.n;
    cfg.sparsity_p = 0.1;
    cfg.count = 64;
    cfg.seed = 888;
    auto insts = generate_instances(s.A, cfg);
    HyperParams on;
    on.c1 = 0.1;
    on.c2 = 0.06;
    on.c3 = 0.5;
    on.layers = 16;
    HyperParams off = on;
    off.c2 = 0.0;
    const double with_mm = mean_final_nmse(s, insts, on, MeanConvention::db_of_mean_ratio, 1);
    const double without = mean_final_nmse(s, insts, off, MeanConvention::db_of_mean_ratio, 1);
    CHECK(with_mm < without);
}

TEST_CASE("no false positives under the oracle threshold rule") {
    // Desk-scale analogue of the first proof step: noiseless instances with
    // support size s so that 2 mu s - mu < 1, thresholds mu ||x - x*||_1.
    static BuildResult br = [] {
        auto A = generate_dictionary(100, 200, 404);
        DictSolverConfig cfg;
        cfg.inner_tol = 1e-8;
        cfg.outer_tol = 1e-6;
        return build_setup(A, cfg);
    }();
    const auto& s = br.setup;
    const int sup_size = static_cast<int>((1.0 + 1.0 / s.mu) / 2.0 - 1e-9);
    REQUIRE(sup_size >= 1);
    REQUIRE(2.0 * s.mu * sup_size - s.mu < 1.0);

    std::mt19937_64 g(515);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(s.n) - 1);
    std::uniform_real_distribution<double> mag(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        IndexSet support;
        while (static_cast<int>(support.size()) < sup_size) {
            int c = pick(g);
            if (std::find(support.begin(), support.end(), c) == support.end())
                support.push_back(c);
        }
        Vector xstar(s.n, 0.0);
        for (int c : support) {
            double v = 0.0;
            while (v == 0.0) v = mag(g);
            xstar[static_cast<std::size_t>(c)] = v;
        }
        Vector b = matvec(s.A, xstar);
        Vector x(s.n, 0.0), xp(s.n, 0.0);
        for (int k = 0; k < 20; ++k) {
            Vector diff(x);
            axpy(-1.0, xstar, diff);
            const double theta = s.mu * l1_norm(diff);
            auto next = momentum_step(s, b, x, xp, {theta, 1.0, 0.3, 0}, k);
            xp = x;
            x = next;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i] != 0.0)
                    REQUIRE(std::find(support.begin(), support.end(), static_cast<int>(i)) !=
                            support.end());
            }
        }
    }
}

TEST_CASE("superlinear protocol: support-stability switch plus CG floors the error") {
    const auto& s = small_setup();
    GenConfig cfg;
    cfg.m = s.m;
    cfg.n = s.n;
    cfg.sparsity_p = 0.1;
    cfg.nonzero_mode = NonzeroMode::constant;
    cfg.constant_value = 1.0;
    cfg.count = 6;
    cfg.seed = 556;
    auto insts = generate_instances(s.A, cfg);

    HyperParams hp;
    hp.c1 = 0.05;
    hp.c2 = 0.04;
    hp.c3 = 0.0;
    hp.layers = 100;
    hp.cg.mode = CgMode::support_stable;
    hp.cg.stability_window = 10;
    hp.cg.support_filter = 0.1;
    hp.cg.stop_nmse_db = -250.0;

    int reached = 0;
    for (const auto& inst : insts) {
        auto tr = run_unrolled(s, inst, hp, ScheduleMode::adaptive);
        if (tr.cg_switch_layer) {
            CHECK(*tr.cg_switch_layer >= hp.cg.stability_window);
            // phases labeled unrolled before the switch, cg after
            for (std::size_t i = 0; i < tr.phase_labels.size(); ++i) {
                const bool cg = static_cast<int>(i) >= *tr.cg_switch_layer;
                CHECK((tr.phase_labels[i] == (cg ? Phase::cg : Phase::unrolled)));
            }
        }
        if (nmse_db(tr.iterates.back(), inst.x_star) <= -250.0) ++reached;
    }
    CHECK(reached >= 5);
}

TEST_CASE("empty support at switch time skips CG with a warning") {
    const auto& s = small_setup();
    Instance inst;
    inst.x_star.assign(s.n, 0.0);
    inst.x_star[0] = 1.0;
    inst.epsilon.assign(s.m, 0.0);
    inst.b.assign(s.m, 0.0);  // zero observation: iterates stay zero
    HyperParams hp;
    hp.layers = 16;
    hp.cg.mode = CgMode::p_threshold;
    hp.cg.p_fraction = 0.9;
    // force the trigger through a fixed schedule with huge p and theta
    std::vector<LayerParams> sched(16, LayerParams{1e6, 1.0, 0.0, static_cast<int>(s.n)});
    auto tr = run_unrolled(s, inst, hp, ScheduleMode::fixed, sched);
    CHECK(tr.empty_support_warning);
    CHECK(!tr.cg_switch_layer.has_value());
}
