#include <doctest.h>

#include <cmath>

#include "lista/dictionary.hpp"
#include "lista/eval.hpp"

using namespace lista;

TEST_CASE("nmse_db: clamp floor, zero output, scale blindness") {
    Vector xs{1.0, -2.0, 0.0};
    CHECK(nmse_db(xs, xs) == -320.0);
    Vector zero(3, 0.0);
    CHECK(nmse_db(zero, xs) == 0.0);
    Vector twice{2.0, -4.0, 0.0};
    CHECK(nmse_db(twice, xs) == 0.0);
    CHECK_THROWS_AS(nmse_db(xs, zero), std::invalid_argument);
}

TEST_CASE("mean_curve: single trace, averaging, zero iterates") {
    Instance a;
    a.x_star = {1.0, 0.0};
    Instance b;
    b.x_star = {0.0, 2.0};

    RecoveryTrace ta;
    ta.iterates = {{0.0, 0.0}, {0.5, 0.0}, {1.0, 0.0}};
    ta.phase_labels = {Phase::unrolled, Phase::unrolled};
    RecoveryTrace tb;
    tb.iterates = {{0.0, 0.0}, {0.0, 1.0}, {0.0, 2.0}};
    tb.phase_labels = {Phase::unrolled, Phase::unrolled};

    std::vector<RecoveryTrace> one{ta};
    std::vector<Instance> ia{a};
    auto single = mean_curve(one, ia, MeanConvention::mean_of_db);
    REQUIRE(single.per_layer_nmse_db.size() == 3);
    CHECK(single.per_layer_nmse_db[0] == doctest::Approx(0.0));
    CHECK(single.per_layer_nmse_db[1] == doctest::Approx(10.0 * std::log10(0.25)));
    CHECK(single.per_layer_nmse_db[2] == -320.0);

    // two instances: entrywise average of the per-instance dB curves
    std::vector<RecoveryTrace> two{ta, tb};
    std::vector<Instance> iab{a, b};
    auto avg = mean_curve(two, iab, MeanConvention::mean_of_db);
    for (std::size_t l = 0; l < 3; ++l) {
        const double da = nmse_db(ta.iterates[l], a.x_star);
        const double db = nmse_db(tb.iterates[l], b.x_star);
        CHECK(avg.per_layer_nmse_db[l] == doctest::Approx((da + db) / 2.0));
    }

    // all-zero iterates give a flat 0 dB curve
    RecoveryTrace tz;
    tz.iterates = {{0.0, 0.0}, {0.0, 0.0}};
    tz.phase_labels = {Phase::unrolled};
    std::vector<RecoveryTrace> zs{tz};
    auto flat = mean_curve(zs, ia, MeanConvention::db_of_mean_ratio);
    for (double v : flat.per_layer_nmse_db) CHECK(v == 0.0);

    std::vector<Instance> mismatch{a, b};
    CHECK_THROWS_AS(mean_curve(zs, mismatch), std::invalid_argument);
}

namespace {

struct SuiteFixture {
    ProblemSetup setup;
    GenConfig matched;
    SuiteFixture() {
        auto A = generate_dictionary(20, 40, 23);
        setup = build_setup(A).setup;
        matched.m = 20;
        matched.n = 40;
        matched.sparsity_p = 0.1;
        matched.count = 12;
        matched.seed = 99;
    }
};

}  // namespace

TEST_CASE("adaptivity suite: frozen hyperparameters are reused across all test sets") {
    SuiteFixture f;
    MethodSet methods;
    HyperParams hp;
    hp.c1 = 0.2;
    hp.c2 = 0.05;
    hp.c3 = 0.5;
    hp.layers = 4;
    hp.cg.mode = CgMode::off;
    methods.hyperlista = hp;
    SuiteConfig cfg;
    cfg.matched_gen = f.matched;
    cfg.layers_test = 4;
    auto curves = run_adaptivity_suite(f.setup, methods, cfg);
    REQUIRE(curves.size() == 4);
    for (const auto& c : curves) {
        CHECK(c.hp_hash == curves[0].hp_hash);
        CHECK(!c.hp_hash.empty());
        REQUIRE(c.per_layer_nmse_db.size() == 5);
        CHECK(c.per_layer_nmse_db[0] == 0.0);  // x(0) = 0 on nonzero truth
    }
    CHECK(curves[0].config_label == "matched");
    CHECK(curves[1].config_label == "sparsity_0.15");
    CHECK(curves[2].config_label == "sigma_2");
    CHECK(curves[3].config_label == "snr_30db");
}

TEST_CASE("extrapolation: equal train and test depths reproduce the standard curves") {
    SuiteFixture f;
    MethodSet methods;
    HyperParams hp;
    hp.c1 = 0.2;
    hp.c2 = 0.05;
    hp.c3 = 0.5;
    hp.layers = 5;
    hp.cg.mode = CgMode::off;
    methods.hyperlista = hp;
    FixedSchedule sched;
    sched.label = "alista_fixed";
    for (int k = 0; k < 5; ++k) sched.layers.push_back({0.05, 0.8, 0.0, k});
    methods.alista_fixed = sched;

    SuiteConfig cfg;
    cfg.matched_gen = f.matched;
    cfg.layers_test = 5;
    auto same = run_extrapolation(f.setup, methods, cfg, 5, 5);
    REQUIRE(same.size() == 2);

    auto insts = generate_instances(f.setup.A, f.matched);
    auto direct = curve_hyperlista(f.setup, insts, hp, 5, cfg.convention, 1, "std");
    CHECK(same[0].per_layer_nmse_db == direct.per_layer_nmse_db);
    auto fixed_direct = curve_fixed(f.setup, insts, sched, 5, cfg.convention, 1, "std");
    CHECK(same[1].per_layer_nmse_db == fixed_direct.per_layer_nmse_db);

    // deeper run extends the fixed schedule by repeating its last layer
    auto deeper = run_extrapolation(f.setup, methods, cfg, 5, 9);
    REQUIRE(deeper[1].per_layer_nmse_db.size() == 10);
}

TEST_CASE("train_fixed_schedule: layer count, beta wiring, p ramp") {
    SuiteFixture f;
    auto insts = generate_instances(f.setup.A, f.matched);
    FixedTrainConfig cfg;
    cfg.layers = 5;
    cfg.beta_grid = {0.0, 0.3};
    cfg.theta_points = 6;
    auto sched = train_fixed_schedule(f.setup, insts, cfg, "alista_mm_fixed");
    REQUIRE(sched.layers.size() == 5);
    CHECK(sched.layers[0].beta == 0.0);  // layer 0 never uses momentum
    const double b1 = sched.layers[1].beta;
    for (std::size_t k = 1; k < 5; ++k) CHECK(sched.layers[k].beta == b1);
    const int p_rate = 1;  // round(0.012 * 40) clamps to the minimum of 1
    for (int k = 0; k < 5; ++k)
        CHECK(sched.layers[static_cast<std::size_t>(k)].p == std::min(p_rate * k, 5));
    // the greedy schedule actually improves on the tuning batch
    auto final_curve = curve_fixed(f.setup, insts, sched, 5, MeanConvention::db_of_mean_ratio, 1, "t");
    CHECK(final_curve.per_layer_nmse_db.back() < -3.0);
}

TEST_CASE("superlinear report: switch metadata and budgets") {
    static BuildResult br = [] {
        auto A = generate_dictionary(50, 100, 101);
        return build_setup(A);
    }();
    GenConfig gen;
    gen.m = 50;
    gen.n = 100;
    gen.sparsity_p = 0.1;
    gen.nonzero_mode = NonzeroMode::constant;
    gen.count = 8;
    gen.seed = 3131;
    auto insts = generate_instances(br.setup.A, gen);

    SuperlinearConfig cfg;
    cfg.gen = gen;
    cfg.hp.c1 = 0.05;
    cfg.hp.c2 = 0.04;
    cfg.hp.c3 = 0.0;
    cfg.hp.layers = 100;
    cfg.hp.cg.mode = CgMode::support_stable;
    cfg.hp.cg.stability_window = 10;
    cfg.hp.cg.support_filter = 0.1;
    cfg.hp.cg.stop_nmse_db = -250.0;
    auto rep = run_superlinear_experiment(br.setup, insts, cfg);
    REQUIRE(rep.switch_layers.size() == 8);
    REQUIRE(rep.budgets.size() == 8);
    int reached = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        if (rep.final_nmse_db[i] <= -250.0) ++reached;
        if (rep.switch_layers[i] >= 0) CHECK(rep.budgets[i] >= rep.switch_layers[i]);
    }
    CHECK(reached >= 7);
    CHECK(rep.single.per_layer_nmse_db.front() == doctest::Approx(0.0));
    CHECK(rep.mean.per_layer_nmse_db.size() >= rep.single.per_layer_nmse_db.size());
}
