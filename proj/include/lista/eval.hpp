#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lista/metrics.hpp"
#include "lista/solvers.hpp"

namespace lista {

struct MetricCurve {
    std::vector<double> per_layer_nmse_db;  // entry 0 is layer 0 (x = 0)
    std::string method_label;
    std::string config_label;
    MeanConvention convention = MeanConvention::db_of_mean_ratio;
    std::string hp_hash;  // fingerprint of the frozen hyperparameters used
};

/// Per-layer mean of per-instance NMSE over aligned traces. Shorter traces
/// (early CG stop) are padded with their final value.
MetricCurve mean_curve(std::span<const RecoveryTrace> traces, std::span<const Instance> instances,
                       MeanConvention convention = MeanConvention::mean_of_db);

// ---- methods under comparison ----

struct IstaSettings {
    double lambda = 0.01;
};

/// A per-layer parameter list trained once on the tuning distribution.
struct FixedSchedule {
    std::vector<LayerParams> layers;
    std::string label;
};

struct FixedTrainConfig {
    int layers = 16;
    std::vector<double> beta_grid{0.0};                  // constant beta candidates
    std::vector<double> gamma_grid{0.4, 0.6, 0.8, 1.0};  // per-layer step-size candidates
    int theta_points = 16;                               // log-spaced threshold scales
    double theta_lo = 0.01, theta_hi = 3.0;              // in units of mu*mean||A^+r||_1
    int p_rate = 0;   // 0 = round(0.012 n) per layer
    int p_max = 0;    // 0 = round(0.12 n)
    MeanConvention convention = MeanConvention::db_of_mean_ratio;
};

/// Greedy layer-wise schedule search: at each layer pick (gamma, theta)
/// minimizing the tuning-batch NMSE after that layer; beta is one constant
/// chosen from beta_grid by final score; p^(k) = min(p_rate*k, p_max).
/// A stand-in for backprop-trained ALISTA baselines, labeled as such.
FixedSchedule train_fixed_schedule(const ProblemSetup& setup,
                                   std::span<const Instance> tuning,
                                   const FixedTrainConfig& cfg, const std::string& label);

struct MethodSet {
    std::optional<HyperParams> hyperlista;
    std::optional<FixedSchedule> alista_fixed;     // beta = 0 throughout
    std::optional<FixedSchedule> alista_mm_fixed;  // constant beta > 0
    std::optional<IstaSettings> ista;
};

// ---- suites ----

struct SuiteConfig {
    GenConfig matched_gen;  // the test distribution matching the tuning one
    int layers_test = 16;
    MeanConvention convention = MeanConvention::db_of_mean_ratio;
    unsigned threads = 1;
};

/// Four test sets with frozen parameters: matched, sparsity 0.15, sigma 2,
/// SNR 30 dB. Shifted sets use matched_gen.seed + 1, 2, 3. One curve per
/// (method, test set).
std::vector<MetricCurve> run_adaptivity_suite(const ProblemSetup& setup, const MethodSet& methods,
                                              const SuiteConfig& cfg);

/// HyperLISTA keeps its three scalars and simply runs deeper; the fixed
/// schedule extrapolates by repeating its last layer.
std::vector<MetricCurve> run_extrapolation(const ProblemSetup& setup, const MethodSet& methods,
                                           const SuiteConfig& cfg, int layers_train,
                                           int layers_test);

struct SuperlinearConfig {
    GenConfig gen;          // constant-magnitude generator
    HyperParams hp;         // c3 = 0; support_stable trigger; stop at -250 dB
    std::size_t single_index = 0;
    MeanConvention convention = MeanConvention::db_of_mean_ratio;
    unsigned threads = 1;
};

struct SuperlinearReport {
    MetricCurve single;              // per-iteration NMSE of one instance
    MetricCurve mean;                // per-iteration mean over the cohort
    std::vector<int> switch_layers;  // -1 when the trigger never fired
    std::vector<int> budgets;        // total iterations executed per instance
    std::vector<double> final_nmse_db;
};

SuperlinearReport run_superlinear_experiment(const ProblemSetup& setup,
                                             std::span<const Instance> instances,
                                             const SuperlinearConfig& cfg);

// ---- helpers shared by suites, search and the CLI ----

/// Mean final-layer NMSE of a method over instances. Divergent or non-finite
/// runs contribute a ratio of 1 (0 dB, the zero-output score).
double mean_final_nmse(const ProblemSetup& setup, std::span<const Instance> instances,
                       const HyperParams& hp, MeanConvention convention, unsigned threads);

MetricCurve curve_hyperlista(const ProblemSetup& setup, std::span<const Instance> instances,
                             const HyperParams& hp, int layers, MeanConvention convention,
                             unsigned threads, const std::string& config_label);
MetricCurve curve_fixed(const ProblemSetup& setup, std::span<const Instance> instances,
                        const FixedSchedule& sched, int layers, MeanConvention convention,
                        unsigned threads, const std::string& config_label);
MetricCurve curve_ista(const ProblemSetup& setup, std::span<const Instance> instances,
                       const IstaSettings& ista, int layers, MeanConvention convention,
                       unsigned threads, const std::string& config_label);

std::string hp_fingerprint(const HyperParams& hp);

void export_curve_csv(const std::string& path, const MetricCurve& curve);

}  // namespace lista
