#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lista/eval.hpp"
#include "lista/solvers.hpp"

namespace lista {

/// Coarse-to-fine Cartesian grid over (c1, c2, c3). The fine pass covers a
/// zoom_factor-wide box around the coarse argmin (clipped to the original
/// ranges) and always re-includes the coarse argmin point, so the two-pass
/// best can never be worse than the coarse best. An axis with lo == hi is
/// pinned to a single point.
struct GridSpec {
    std::array<double, 2> c1_range{0.05, 2.0};
    std::array<double, 2> c2_range{0.0, 1.0};
    std::array<double, 2> c3_range{0.0, 1.0};
    int coarse_points = 8;
    int fine_points = 8;
    double zoom_factor = 0.25;
    std::size_t minibatch_size = 256;

    void validate() const;
};

struct EvalRecord {
    double c1, c2, c3;
    int pass;  // 1 = coarse, 2 = fine
    double nmse_db;
};

struct SearchReport {
    std::vector<EvalRecord> evaluations;
    double best_c1 = 0.0, best_c2 = 0.0, best_c3 = 0.0;
    double best_score = 0.0;
    std::uint64_t tuning_seed = 0;
};

/// Mean final-layer NMSE of the adaptive solver over the given instances;
/// divergent instances contribute the zero-output ratio.
double evaluate_triple(const ProblemSetup& setup, std::span<const Instance> instances,
                       const HyperParams& hp,
                       MeanConvention convention = MeanConvention::db_of_mean_ratio,
                       unsigned threads = 1);

/// Two-pass search. `base` supplies everything but (c1, c2, c3): unroll
/// depth, CG switch config, p-formula mode. Instances are truncated to
/// grid.minibatch_size. Ties break lexicographically on (c1, c2, c3);
/// concurrent evaluation returns the same report as serial.
SearchReport grid_search(const ProblemSetup& setup, std::span<const Instance> instances,
                         const GridSpec& grid, const HyperParams& base,
                         MeanConvention convention = MeanConvention::db_of_mean_ratio,
                         unsigned threads = 1);

void export_search_csv(const std::string& path, const SearchReport& report);
void export_search_json(const std::string& path, const SearchReport& report,
                        const HyperParams& base);

}  // namespace lista
