#include <doctest.h>

#include <cmath>

#include "lista/dictionary.hpp"
#include "lista/hypersearch.hpp"

using namespace lista;

namespace {

struct Fixture {
    ProblemSetup setup;
    std::vector<Instance> instances;
    HyperParams base;
    Fixture() {
        auto A = generate_dictionary(20, 40, 17);
        setup = build_setup(A).setup;
        GenConfig cfg;
        cfg.m = 20;
        cfg.n = 40;
        cfg.sparsity_p = 0.1;
        cfg.count = 24;
        cfg.seed = 5150;
        instances = generate_instances(A, cfg);
        base.layers = 6;
        base.cg.mode = CgMode::off;
    }
};

const Fixture& fx() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("evaluate_triple: saturated threshold scores exactly 0 dB") {
    const auto& f = fx();
    CHECK(evaluate_triple(f.setup, f.instances, f.base.with(1e6, 0.1, 0.5)) == 0.0);
}

TEST_CASE("evaluate_triple: repeating one instance does not move the mean") {
    const auto& f = fx();
    std::vector<Instance> one(1, f.instances[0]);
    std::vector<Instance> ten(10, f.instances[0]);
    const auto hp = f.base.with(0.2, 0.1, 0.5);
    CHECK(evaluate_triple(f.setup, one, hp) ==
          doctest::Approx(evaluate_triple(f.setup, ten, hp)).epsilon(1e-12));
}

TEST_CASE("grid_search: argmin equals exhaustive enumeration, fine pass keeps the coarse best") {
    const auto& f = fx();
    GridSpec grid;
    grid.coarse_points = 4;
    grid.fine_points = 4;
    grid.minibatch_size = 16;
    auto report = grid_search(f.setup, f.instances, grid, f.base);

    double best = 1e300;
    for (const auto& e : report.evaluations) best = std::min(best, e.nmse_db);
    CHECK(report.best_score == best);

    // coarse argmin is re-included in the fine grid
    const EvalRecord* coarse_best = nullptr;
    for (const auto& e : report.evaluations) {
        if (e.pass != 1) continue;
        if (!coarse_best || e.nmse_db < coarse_best->nmse_db) coarse_best = &e;
    }
    REQUIRE(coarse_best);
    bool found = false;
    for (const auto& e : report.evaluations)
        if (e.pass == 2 && e.c1 == coarse_best->c1 && e.c2 == coarse_best->c2 &&
            e.c3 == coarse_best->c3)
            found = true;
    CHECK(found);
    CHECK(report.best_score <= coarse_best->nmse_db);

    // independent re-evaluation of the winner reproduces its stored score
    std::span<const Instance> batch(f.instances.data(), 16);
    CHECK(evaluate_triple(f.setup, batch,
                          f.base.with(report.best_c1, report.best_c2, report.best_c3)) ==
          report.best_score);
}

TEST_CASE("grid_search: degenerate ranges collapse to a single point per pass") {
    const auto& f = fx();
    GridSpec grid;
    grid.c1_range = {0.3, 0.3};
    grid.c2_range = {0.1, 0.1};
    grid.c3_range = {0.5, 0.5};
    grid.minibatch_size = 8;
    auto report = grid_search(f.setup, f.instances, grid, f.base);
    CHECK(report.evaluations.size() == 2);  // one coarse + one fine point
    CHECK(report.best_c1 == 0.3);
    CHECK(report.best_c2 == 0.1);
    CHECK(report.best_c3 == 0.5);
}

TEST_CASE("grid_search: concurrent evaluation reproduces the serial report") {
    const auto& f = fx();
    GridSpec grid;
    grid.coarse_points = 3;
    grid.fine_points = 3;
    grid.minibatch_size = 8;
    auto serial = grid_search(f.setup, f.instances, grid, f.base, MeanConvention::db_of_mean_ratio, 1);
    auto threaded = grid_search(f.setup, f.instances, grid, f.base, MeanConvention::db_of_mean_ratio, 4);
    REQUIRE(serial.evaluations.size() == threaded.evaluations.size());
    for (std::size_t i = 0; i < serial.evaluations.size(); ++i) {
        CHECK(serial.evaluations[i].c1 == threaded.evaluations[i].c1);
        CHECK(serial.evaluations[i].nmse_db == threaded.evaluations[i].nmse_db);
    }
    CHECK(serial.best_score == threaded.best_score);
    CHECK(serial.best_c1 == threaded.best_c1);
}

TEST_CASE("grid_search: validation") {
    const auto& f = fx();
    GridSpec bad;
    bad.c1_range = {2.0, 0.05};
    CHECK_THROWS_AS(grid_search(f.setup, f.instances, bad, f.base), std::invalid_argument);
    GridSpec bad2;
    bad2.c3_range = {0.0, 1.5};
    CHECK_THROWS_AS(grid_search(f.setup, f.instances, bad2, f.base), std::invalid_argument);
    GridSpec bad3;
    bad3.coarse_points = 1;
    CHECK_THROWS_AS(grid_search(f.setup, f.instances, bad3, f.base), std::invalid_argument);
}
