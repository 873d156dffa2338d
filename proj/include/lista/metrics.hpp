#pragma once

#include <span>

namespace lista {

inline constexpr double kNmseFloorDb = -320.0;
inline constexpr double kNmseCeilDb = 100.0;

/// Which mean is reported for a batch of NMSE values: decibels of the mean
/// squared-error ratio (default, matching the cited convention) or the mean
/// of per-instance decibel values.
enum class MeanConvention { db_of_mean_ratio, mean_of_db };

/// 10*log10(||x_hat - x*||^2 / ||x*||^2), clamped to [-320, 100] dB.
/// Throws std::invalid_argument when x* is the zero vector.
double nmse_db(std::span<const double> x_hat, std::span<const double> x_star);

const char* to_string(MeanConvention c);

}  // namespace lista
