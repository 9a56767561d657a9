#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cftm/fbm.hpp"
#include "cftm/hurst.hpp"
#include "cftm/random.hpp"

namespace cftm {

/// Covariance between fBm increments n steps apart:
/// 0.5 * step^{2H} (|n+1|^{2H} + |n-1|^{2H} - 2 n^{2H}). Requires n >= 1.
double increment_autocov(std::size_t n, HurstIndex h, double step = 1.0);

enum class MemoryClass { long_term_dependency, roughness, boundary };
const char* to_string(MemoryClass c);

inline constexpr double kBoundaryBand = 0.01;
inline constexpr std::size_t kMinLrdHorizon = 1000;

struct LrdReport {
    HurstIndex h{0.5};
    std::size_t horizon = 0;
    std::vector<double> partial_sums;   // entry m-1 holds sum_{n=1}^{m} |gamma(n)|
    double tail_exponent = 0.0;         // analytic decay 2H - 2 of gamma(n)
    double growth_exponent = 0.0;       // fitted log-log slope of the last decade of partial sums
    double last_decade_increase = 0.0;  // (S(N) - S(N/10)) / S(N), 0 when S is identically 0
    MemoryClass classification = MemoryClass::boundary;
};

/// Classifies by the analytic tail exponent; the numeric partial sums are
/// kept as corroboration. |H - 1/2| <= 0.01 is reported as boundary.
LrdReport classify_lrd(HurstIndex h, std::size_t horizon);

struct CoordinateRegularity {
    std::optional<HurstEstimate> estimate;
    std::string error;  // set when estimation failed (e.g. constant series)
};

struct RegularityTransferReport {
    HurstIndex h{0.5};
    std::size_t num_topics = 0;
    std::size_t length = 0;
    Seed seed = 0;
    std::vector<CoordinateRegularity> coordinates;
};

/// Simulates a zero-drift alpha path on an equispaced grid over [0, 1] with
/// `length` steps, maps it through softmax and estimates H of each
/// coordinate's increment series.
RegularityTransferReport empirical_regularity_transfer(std::size_t num_topics, HurstIndex h,
                                                       std::size_t length, Seed seed);

struct SelfSimilarityReport {
    HurstIndex h{0.5};
    double a = 1.0;
    double t = 1.0;
    std::size_t num_draws = 0;
    Seed seed = 0;
    double var_t = 0.0;
    double var_at = 0.0;
    double ratio = 0.0;  // var_at / (a^{2H} var_t)
};

/// Draws (B_t, B_{at}) jointly and compares second moments (mean is known to be 0).
SelfSimilarityReport self_similarity_check(HurstIndex h, double a, double t, std::size_t num_draws,
                                           Seed seed);

/// Sample autocovariance at lags 0..max_lag. With centered = false the mean
/// is taken as 0, which is the right choice for fGn.
std::vector<double> sample_autocovariance(std::span<const double> x, std::size_t max_lag,
                                          bool centered = false);

}  // namespace cftm
