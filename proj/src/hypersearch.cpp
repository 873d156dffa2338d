#include "lista/hypersearch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <tuple>

#include "lista/core/parallel.hpp"

namespace lista {

void GridSpec::validate() const {
    auto axis_ok = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
    if (!axis_ok(c1_range) || !axis_ok(c2_range) || !axis_ok(c3_range))
        throw std::invalid_argument("grid: each axis needs lo <= hi");
    if (!(c1_range[0] > 0.0)) throw std::invalid_argument("grid: c1 range must be positive");
    if (c2_range[0] < 0.0) throw std::invalid_argument("grid: c2 range must be >= 0");
    if (c3_range[0] < 0.0 || c3_range[1] > 1.0)
        throw std::invalid_argument("grid: c3 range must lie in [0, 1]");
    if (coarse_points < 2 || fine_points < 2)
        throw std::invalid_argument("grid: points per axis must be >= 2");
    if (!(zoom_factor > 0.0 && zoom_factor <= 1.0))
        throw std::invalid_argument("grid: zoom_factor must be in (0, 1]");
    if (minibatch_size == 0) throw std::invalid_argument("grid: minibatch_size must be > 0");
}

double evaluate_triple(const ProblemSetup& setup, std::span<const Instance> instances,
                       const HyperParams& hp, MeanConvention convention, unsigned threads) {
    return mean_final_nmse(setup, instances, hp, convention, threads);
}

namespace {

std::vector<double> axis_points(double lo, double hi, int k) {
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(k - 1);
        pts.push_back(lo + t * (hi - lo));
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct Triple {
    double c1, c2, c3;
};

void run_pass(const ProblemSetup& setup, std::span<const Instance> instances,
              const HyperParams& base, MeanConvention convention, unsigned threads,
              const std::vector<Triple>& triples, int pass, SearchReport& report) {
    std::vector<double> scores(triples.size());
    parallel_for(triples.size(), threads, [&](std::size_t i) {
        scores[i] = evaluate_triple(setup, instances,
                                    base.with(triples[i].c1, triples[i].c2, triples[i].c3),
                                    convention, 1);
    });
    for (std::size_t i = 0; i < triples.size(); ++i)
        report.evaluations.push_back({triples[i].c1, triples[i].c2, triples[i].c3, pass, scores[i]});
}

std::vector<Triple> cartesian(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& c) {
    std::vector<Triple> out;
    out.reserve(a.size() * b.size() * c.size());
    for (double x : a)
        for (double y : b)
            for (double z : c) out.push_back({x, y, z});
    return out;
}

}  // namespace

SearchReport grid_search(const ProblemSetup& setup, std::span<const Instance> instances,
                         const GridSpec& grid, const HyperParams& base,
                         MeanConvention convention, unsigned threads) {
    grid.validate();
    if (instances.empty()) throw std::invalid_argument("grid_search: no tuning instances");
    if (instances.size() > grid.minibatch_size)
        instances = instances.subspan(0, grid.minibatch_size);

    SearchReport report;
    const auto coarse = cartesian(axis_points(grid.c1_range[0], grid.c1_range[1], grid.coarse_points),
                                  axis_points(grid.c2_range[0], grid.c2_range[1], grid.coarse_points),
                                  axis_points(grid.c3_range[0], grid.c3_range[1], grid.coarse_points));
    run_pass(setup, instances, base, convention, threads, coarse, 1, report);

    auto best_of = [&](std::size_t lo, std::size_t hi) {
        std::size_t arg = lo;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& e = report.evaluations[i];
            const auto& b = report.evaluations[arg];
            if (e.nmse_db < b.nmse_db ||
                (e.nmse_db == b.nmse_db &&
                 std::tie(e.c1, e.c2, e.c3) < std::tie(b.c1, b.c2, b.c3)))
                arg = i;
        }
        return arg;
    };
    const std::size_t coarse_arg = best_of(0, report.evaluations.size());
    const EvalRecord coarse_best = report.evaluations[coarse_arg];

    auto fine_axis = [&](const std::array<double, 2>& range, double center, int points) {
        const double width = (range[1] - range[0]) * grid.zoom_factor;
        double lo = std::max(range[0], center - width / 2.0);
        double hi = std::min(range[1], center + width / 2.0);
        if (hi < lo) lo = hi = center;
        auto pts = axis_points(lo, hi, points);
        if (std::find(pts.begin(), pts.end(), center) == pts.end()) {
            pts.push_back(center);  // coarse argmin stays in the fine grid
            std::sort(pts.begin(), pts.end());
        }
        return pts;
    };
    const auto fine = cartesian(fine_axis(grid.c1_range, coarse_best.c1, grid.fine_points),
                                fine_axis(grid.c2_range, coarse_best.c2, grid.fine_points),
                                fine_axis(grid.c3_range, coarse_best.c3, grid.fine_points));
    run_pass(setup, instances, base, convention, threads, fine, 2, report);

    const std::size_t overall = best_of(0, report.evaluations.size());
    report.best_c1 = report.evaluations[overall].c1;
    report.best_c2 = report.evaluations[overall].c2;
    report.best_c3 = report.evaluations[overall].c3;
    report.best_score = report.evaluations[overall].nmse_db;
    return report;
}

void export_search_csv(const std::string& path, const SearchReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "c1,c2,c3,pass,nmse_db\n";
    char buf[160];
    for (const auto& e : report.evaluations) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d,%.17g\n", e.c1, e.c2, e.c3, e.pass,
                      e.nmse_db);
        out << buf;
    }
}

void export_search_json(const std::string& path, const SearchReport& report,
                        const HyperParams& base) {
    nlohmann::json j;
    j["best"] = {{"c1", report.best_c1},
                 {"c2", report.best_c2},
                 {"c3", report.best_c3},
                 {"nmse_db", report.best_score}};
    j["layers"] = base.layers;
    j["p_formula"] = base.p_formula == PFormula::count ? "count" : "fraction";
    j["tuning_seed"] = report.tuning_seed;
    j["evaluation_count"] = report.evaluations.size();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace lista
