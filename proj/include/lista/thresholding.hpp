#pragma once

#include <span>

#include "lista/core/types.hpp"

namespace lista {

/// Threshold with support selection: the p entries of largest magnitude pass
/// through untouched (provided they clear the threshold), everything else is
/// soft-thresholded. p = 0 is plain soft thresholding, p = n is hard
/// thresholding.
struct ThresholdSpec {
    double theta = 0.0;  // >= 0
    int p = 0;           // in [0, n]
};

/// Entrywise sign(v_i) * max(|v_i| - theta, 0).
Vector soft_threshold(std::span<const double> v, double theta);

/// Indices of the p largest-magnitude entries; ties broken by lower index.
/// Returned sorted ascending.
IndexSet top_p_support(std::span<const double> v, int p);

Vector support_select_threshold(std::span<const double> v, const ThresholdSpec& spec);

/// In-place variant used by the solver inner loop; scratch must have v.size()
/// capacity and out may alias v.
void support_select_threshold_inplace(std::span<const double> v, const ThresholdSpec& spec,
                                      std::span<double> out, std::vector<int>& scratch);

}  // namespace lista
