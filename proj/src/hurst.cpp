#include "cftm/hurst.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cftm/error.hpp"

namespace cftm {
namespace {

// Roughly `count` log-spaced integer scales in [lo, hi], deduplicated.
std::vector<std::size_t> log_scales(std::size_t lo, std::size_t hi, std::size_t count) {
    std::vector<std::size_t> out;
    if (hi < lo) hi = lo;
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(hi));
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const auto s = static_cast<std::size_t>(std::floor(std::exp(a + t * (b - a)) + 1e-9));
        if (out.empty() || s != out.back()) out.push_back(s);
    }
    return out;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

void validate_series(std::span<const double> x) {
    if (x.size() < kMinHurstSeriesLength) {
        throw DomainError("Hurst estimation needs at least " +
                          std::to_string(kMinHurstSeriesLength) + " increments, got " +
                          std::to_string(x.size()));
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double spread = *hi - *lo;
    const double magnitude = std::max(std::abs(*hi), std::abs(*lo));
    if (!(spread > 1e-14 * std::max(magnitude, 1e-300)) || !std::isfinite(spread)) {
        throw DomainError("Hurst estimation on a degenerate (constant) series");
    }
}

constexpr double kHurstFloor = 1e-3;
constexpr double kHurstCeil = 1.0 - 1e-3;

}  // namespace

double HurstEstimate::disagreement() const { return std::abs(estimate - dfa); }

double estimate_hurst_aggregated_variance(std::span<const double> x,
                                          std::vector<HurstScalingPoint>* table,
                                          double* raw_slope) {
    validate_series(x);
    const std::size_t n = x.size();
    const auto scales = log_scales(4, std::max<std::size_t>(n / 50, 8), 20);

    std::vector<double> log_m, log_v, blocks;
    for (std::size_t m : scales) {
        const std::size_t k = n / m;
        if (k < 2) continue;
        std::vector<double> means(k);
        for (std::size_t b = 0; b < k; ++b) {
            means[b] = std::accumulate(x.begin() + b * m, x.begin() + (b + 1) * m, 0.0) /
                       static_cast<double>(m);
        }
        const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(k);
        double var = 0.0;
        for (double v : means) var += (v - mean) * (v - mean);
        var /= static_cast<double>(k - 1);
        if (!(var > 0.0)) continue;
        log_m.push_back(std::log(static_cast<double>(m)));
        log_v.push_back(std::log(var));
        blocks.push_back(static_cast<double>(k));
        if (table) table->push_back({static_cast<double>(m), var});
    }
    if (log_m.size() < 3) throw DomainError("too few usable block sizes for aggregated variance");
    if (raw_slope) *raw_slope = ols_slope(log_m, log_v);

    // Centering on the grand mean scales E[var] by (k - k^{2H-1}) / (k - 1) for
    // fGn with k blocks. Fit H with that factor in the model; the intercept is
    // profiled out, leaving a one-dimensional least-squares search.
    auto sse = [&](double h) {
        std::vector<double> r(log_m.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double k = blocks[i];
            const double bias = std::log((k - std::pow(k, 2.0 * h - 1.0)) / (k - 1.0));
            r[i] = log_v[i] - (2.0 * h - 2.0) * log_m[i] - bias;
        }
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
        double s = 0.0;
        for (double v : r) s += (v - mean) * (v - mean);
        return s;
    };
    double best_h = kHurstFloor, best = sse(best_h);
    for (double h = kHurstFloor; h <= kHurstCeil + 1e-12; h += 1e-3) {
        const double v = sse(h);
        if (v < best) best = v, best_h = h;
    }
    // Golden-section refinement on the bracketing cell.
    double lo = std::max(kHurstFloor, best_h - 1e-3), hi = std::min(kHurstCeil, best_h + 1e-3);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 40; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (sse(a) < sse(b)) hi = b; else lo = a;
    }
    return std::clamp(0.5 * (lo + hi), kHurstFloor, kHurstCeil);
}

double estimate_hurst_dfa(std::span<const double> x, std::vector<HurstScalingPoint>* table) {
    validate_series(x);
    const std::size_t n = x.size();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> profile(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) profile[i] = acc += x[i] - mean;

    std::vector<double> log_s, log_f;
    for (std::size_t m : log_scales(10, std::max<std::size_t>(n / 10, 16), 20)) {
        const std::size_t k = n / m;
        if (k < 1 || m < 3) continue;
        // Linear detrend in each box; the regressor t = 0..m-1 is shared.
        const double tm = 0.5 * static_cast<double>(m - 1);
        double stt = 0.0;
        for (std::size_t t = 0; t < m; ++t) stt += (t - tm) * (t - tm);
        double total = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            const double* y = profile.data() + b * m;
            const double ym = std::accumulate(y, y + m, 0.0) / static_cast<double>(m);
            double sty = 0.0;
            for (std::size_t t = 0; t < m; ++t) sty += (t - tm) * (y[t] - ym);
            const double slope = sty / stt;
            for (std::size_t t = 0; t < m; ++t) {
                const double r = y[t] - ym - slope * (t - tm);
                total += r * r;
            }
        }
        const double f = std::sqrt(total / static_cast<double>(k * m));
        if (!(f > 0.0)) continue;
        log_s.push_back(std::log(static_cast<double>(m)));
        log_f.push_back(std::log(f));
        if (table) table->push_back({static_cast<double>(m), f});
    }
    if (log_s.size() < 3) throw DomainError("too few usable box sizes for DFA");
    return std::clamp(ols_slope(log_s, log_f), kHurstFloor, kHurstCeil);
}

HurstEstimate estimate_hurst(std::span<const double> increments) {
    HurstEstimate out;
    out.estimate = estimate_hurst_aggregated_variance(increments, &out.aggregated_variance,
                                                      &out.aggregated_variance_slope);
    out.dfa = estimate_hurst_dfa(increments, &out.fluctuation);
    return out;
}

}  // namespace cftm
