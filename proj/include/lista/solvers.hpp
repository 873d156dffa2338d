#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lista/problems.hpp"
#include "lista/thresholding.hpp"

namespace lista {

/// Per-layer parameters of the unrolled iteration
///   x+ = eta_theta^p( x + gamma W^T(b - A x) + beta (x - x_prev) ).
struct LayerParams {
    double theta = 0.0;  // >= 0
    double gamma = 1.0;  // > 0
    double beta = 0.0;   // >= 0; ignored at layer 0 (x^(-1) undefined)
    int p = 0;           // in [0, n]
};

enum class CgMode { off, p_threshold, support_stable };

struct CgSwitchConfig {
    CgMode mode = CgMode::p_threshold;
    double p_fraction = 0.9;       // p_threshold: fire when p^(k) >= fraction * n
    int stability_window = 10;     // support_stable: layers with unchanged support
    double support_filter = 0.1;   // relative magnitude cutoff for support estimation
    int max_cg_iters = 0;          // 0 = estimated support size
    std::optional<double> stop_nmse_db;  // early stop; needs ground truth (see RunHooks)

    void validate() const;
};

/// How the real-valued support-selection formula is read: as an entry count
/// (literal) or as a fraction of n saturating at 1.
enum class PFormula { count, fraction };

struct HyperParams {
    double c1 = 0.2;   // threshold scale, > 0
    double c2 = 0.05;  // momentum scale, >= 0
    double c3 = 0.5;   // support-selection scale, in [0, 1]
    int layers = 16;   // unroll depth K
    CgSwitchConfig cg;
    PFormula p_formula = PFormula::count;

    void validate() const;
    HyperParams with(double nc1, double nc2, double nc3) const {
        HyperParams h = *this;
        h.c1 = nc1; h.c2 = nc2; h.c3 = nc3;
        return h;
    }
};

enum class Phase { unrolled, cg };

struct RecoveryTrace {
    std::vector<Vector> iterates;          // x^(0) = 0 first; one entry per step after
    std::vector<LayerParams> params;       // one per executed unrolled layer
    std::vector<Phase> phase_labels;       // aligned with iterates[1..]
    std::optional<int> cg_switch_layer;    // iterate index where the cg phase begins
    bool empty_support_warning = false;    // trigger fired on an empty support: cg skipped
    bool cg_breakdown_warning = false;     // d^T Q d <= 0 encountered
};

class SolverDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- single-step operations ----

/// One ISTA iteration: eta_{lambda/L}( x + (1/L) A^T (b - A x) ).
Vector ista_step(const ProblemSetup& setup, std::span<const double> b,
                 std::span<const double> x, double lambda, double L);

/// Largest eigenvalue of A^T A by power iteration (relative tolerance tol).
double power_iteration_lmax(const Matrix& A, double tol = 1e-8, std::size_t max_iters = 100000);

/// One momentum-augmented step; beta is ignored at k = 0. With beta = 0 and
/// p = 0 this is exactly the analytic-weight soft-threshold step.
Vector momentum_step(const ProblemSetup& setup, std::span<const double> b,
                     std::span<const double> x_k, std::span<const double> x_km1,
                     const LayerParams& params, int k);

/// Instance-adaptive parameters: gamma = 1, theta = c1*mu*||A^+(Ax-b)||_1,
/// beta = c2*mu*||x||_0 (0 at k = 0), p from the log-residual-ratio formula.
/// apb_l1 is ||A^+ b||_1, computed once per instance. A zero b yields
/// theta = beta = p = 0; a vanishing residual yields theta = 0, p = n.
LayerParams adaptive_params(const ProblemSetup& setup, std::span<const double> x,
                            std::span<const double> b, double apb_l1, const HyperParams& hp,
                            int k);

/// Indices i with |x_i| > filter_ratio * ||x||_inf (empty for x = 0).
IndexSet estimate_support(std::span<const double> x, double filter_ratio);

struct CgResult {
    Vector x;  // full length; entries off the support are zero
    int iterations = 0;
    bool breakdown = false;     // Q not positive definite along some direction
    double residual_l2 = 0.0;
};

/// Conjugate gradient on (W_S)^T A_S x_S = (W_S)^T b, warm-started from
/// x_init restricted to S. Stops at max_iters (0 = |S|) or when the residual
/// drops to tol * ||(W_S)^T b||_2.
CgResult cg_refine(const ProblemSetup& setup, std::span<const double> b,
                   std::span<const double> x_init, const IndexSet& support, int max_iters = 0,
                   double tol = 0.0);

// ---- unrolled runs ----

enum class ScheduleMode { adaptive, fixed };

/// Full unrolled run with trace recording. In fixed mode `schedule` supplies
/// one LayerParams per layer; in adaptive mode parameters follow
/// adaptive_params each layer. The CG trigger in hp.cg is honored in both
/// modes. `x_star` (optional) enables the stop_nmse_db early stop.
RecoveryTrace run_unrolled(const ProblemSetup& setup, const Instance& instance,
                           const HyperParams& hp, ScheduleMode mode,
                           std::span<const LayerParams> schedule = {},
                           const Vector* x_star_for_stop = nullptr);

/// Algorithm front door: adaptive parameters + CG switch.
RecoveryTrace run_hyperlista(const ProblemSetup& setup, const Instance& instance,
                             const HyperParams& hp);

/// Lean evaluation: no trace storage. The observer (if any) sees every
/// iterate including x^(0).
using IterateObserver =
    std::function<void(int idx, std::span<const double> x, Phase phase)>;
Vector run_final(const ProblemSetup& setup, std::span<const double> b, const HyperParams& hp,
                 ScheduleMode mode = ScheduleMode::adaptive,
                 std::span<const LayerParams> schedule = {},
                 const Vector* x_star_for_stop = nullptr,
                 const IterateObserver& observer = nullptr);

// ---- trace export ----

void export_trace_csv(const std::string& path, const RecoveryTrace& trace,
                      std::span<const double> x_star);
void export_trace_json(const std::string& path, const RecoveryTrace& trace);

}  // namespace lista
