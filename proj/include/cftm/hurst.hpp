#pragma once

#include <span>
#include <vector>

namespace cftm {

struct HurstScalingPoint {
    double scale = 0.0;      // block or box size
    double statistic = 0.0;  // block-mean variance or DFA fluctuation
};

/// Hurst estimates for an increment series. `estimate` is the aggregated
/// variance value; `dfa` is reported alongside for cross-checking.
struct HurstEstimate {
    double estimate = 0.0;
    double dfa = 0.0;
    double aggregated_variance_slope = 0.0;  // raw log-log slope, uncorrected
    std::vector<HurstScalingPoint> aggregated_variance;
    std::vector<HurstScalingPoint> fluctuation;

    double disagreement() const;
};

inline constexpr std::size_t kMinHurstSeriesLength = 256;

/// Throws DomainError for series shorter than 256 or with zero variance.
HurstEstimate estimate_hurst(std::span<const double> increments);

double estimate_hurst_aggregated_variance(std::span<const double> increments,
                                          std::vector<HurstScalingPoint>* table = nullptr,
                                          double* raw_slope = nullptr);
double estimate_hurst_dfa(std::span<const double> increments,
                          std::vector<HurstScalingPoint>* table = nullptr);

}  // namespace cftm
