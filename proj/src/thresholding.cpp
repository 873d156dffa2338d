#include "lista/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lista/kernels/kernels.hpp"

namespace lista {

Vector soft_threshold(std::span<const double> v, double theta) {
    if (theta < 0.0) throw std::invalid_argument("soft_threshold: theta must be >= 0");
    Vector out(v.size());
    kernels::active().soft_threshold(v.data(), theta, out.data(), v.size());
    return out;
}

IndexSet top_p_support(std::span<const double> v, int p) {
    const int n = static_cast<int>(v.size());
    if (p < 0 || p > n) throw std::invalid_argument("top_p_support: p out of [0, n]");
    if (p == 0) return {};
    IndexSet idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // larger magnitude first; equal magnitudes keep the lower index
    auto better = [&](int a, int b) {
        const double ma = std::fabs(v[static_cast<std::size_t>(a)]);
        const double mb = std::fabs(v[static_cast<std::size_t>(b)]);
        if (ma != mb) return ma > mb;
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + (p - 1), idx.end(), better);
    idx.resize(p);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Vector support_select_threshold(std::span<const double> v, const ThresholdSpec& spec) {
    Vector out(v.size());
    std::vector<int> scratch;
    support_select_threshold_inplace(v, spec, out, scratch);
    return out;
}

void support_select_threshold_inplace(std::span<const double> v, const ThresholdSpec& spec,
                                      std::span<double> out, std::vector<int>& scratch) {
    if (spec.theta < 0.0) throw std::invalid_argument("support_select_threshold: theta < 0");
    const std::size_t n = v.size();
    kernels::active().soft_threshold(v.data(), spec.theta, out.data(), n);
    if (spec.p <= 0) return;
    if (spec.p > static_cast<int>(n))
        throw std::invalid_argument("support_select_threshold: p > n");
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), 0);
    auto better = [&](int a, int b) {
        const double ma = std::fabs(v[static_cast<std::size_t>(a)]);
        const double mb = std::fabs(v[static_cast<std::size_t>(b)]);
        if (ma != mb) return ma > mb;
        return a < b;
    };
    std::nth_element(scratch.begin(), scratch.begin() + (spec.p - 1), scratch.end(), better);
    // selected entries pass through, but only strictly above the threshold;
    // |v_i| <= theta maps to 0 in every branch of the operator
    for (int t = 0; t < spec.p; ++t) {
        const auto i = static_cast<std::size_t>(scratch[static_cast<std::size_t>(t)]);
        if (std::fabs(v[i]) > spec.theta) out[i] = v[i];
    }
}

}  // namespace lista
