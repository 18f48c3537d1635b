#pragma once

#include <span>

namespace eko {

/// Forecast score in percent: 100 * accuracy * tightness.
struct PQScore {
    double value = 0.0;
    double accuracy = 0.0;   // max(0, 1 - RMSE / sigma_y)
    double tightness = 0.0;  // max(0, 1 - mean radius / (4 sigma_y))

    bool operator==(const PQScore&) const = default;
};

/// Throws ValidationError on length mismatch, empty input or sigma_y <= 0.
PQScore prediction_quality(std::span<const double> actual, std::span<const double> predicted,
                           std::span<const double> radii, double sigma_y);

/// Population standard deviation.
double standard_deviation(std::span<const double> v);

}  // namespace eko
