#include "cftm/diagnostics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "cftm/error.hpp"
#include "cftm/generative.hpp"

namespace cftm {

double increment_autocov(std::size_t n, HurstIndex h, double step) {
    if (n < 1) throw DomainError("increment lag must be >= 1");
    if (!(step > 0.0)) throw DomainError("step must be positive");
    return std::pow(step, h.twice()) * fgn_autocov(n, h);
}

const char* to_string(MemoryClass c) {
    switch (c) {
        case MemoryClass::long_term_dependency: return "long_term_dependency";
        case MemoryClass::roughness: return "roughness";
        case MemoryClass::boundary: return "boundary";
    }
    return "unknown";
}

LrdReport classify_lrd(HurstIndex h, std::size_t horizon) {
    if (horizon < kMinLrdHorizon) {
        throw DomainError("horizon must be >= " + std::to_string(kMinLrdHorizon));
    }
    LrdReport r;
    r.h = h;
    r.horizon = horizon;
    r.tail_exponent = h.twice() - 2.0;
    r.partial_sums.resize(horizon);
    double sum = 0.0;
    for (std::size_t n = 1; n <= horizon; ++n) {
        sum += std::abs(increment_autocov(n, h));
        r.partial_sums[n - 1] = sum;
    }

    const std::size_t start = horizon / 10;
    const double s_end = r.partial_sums.back();
    const double s_start = r.partial_sums[start - 1];
    if (s_end > 0.0) {
        r.last_decade_increase = (s_end - s_start) / s_end;
        // Least-squares slope of log S(m) on log m over 20 log-spaced points of the last decade.
        const int points = 20;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < points; ++i) {
            const double lm = std::log(static_cast<double>(start)) +
                              std::log(10.0) * static_cast<double>(i) / (points - 1);
            const auto m = std::min(horizon, static_cast<std::size_t>(std::llround(std::exp(lm))));
            const double x = std::log(static_cast<double>(m)), y = std::log(r.partial_sums[m - 1]);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        r.growth_exponent = (points * sxy - sx * sy) / (points * sxx - sx * sx);
    }

    if (std::abs(h.value() - 0.5) <= kBoundaryBand) r.classification = MemoryClass::boundary;
    else if (r.tail_exponent > -1.0) r.classification = MemoryClass::long_term_dependency;
    else r.classification = MemoryClass::roughness;
    return r;
}

RegularityTransferReport empirical_regularity_transfer(std::size_t num_topics, HurstIndex h,
                                                       std::size_t length, Seed seed) {
    if (num_topics < 1) throw DomainError("num_topics must be >= 1");
    if (length < 4096) throw DomainError("path length must be >= 4096");
    ModelConfig config = make_config(num_topics, 2, h, TimeGrid::uniform(length, 1.0 / static_cast<double>(length)),
                                     1.0, 1.0, 1.0, 0.0, 1);
    Rng rng(seed);
    const ParamPath path = sample_param_path(config, rng);

    RegularityTransferReport report;
    report.h = h;
    report.num_topics = num_topics;
    report.length = length;
    report.seed = seed;
    const auto rows = path.alpha.rows();
    Eigen::MatrixXd probs(rows, path.alpha.cols());
    for (Eigen::Index t = 0; t < rows; ++t) {
        probs.row(t) = softmax(Eigen::VectorXd(path.alpha.row(t).transpose())).transpose();
    }
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
        std::vector<double> inc(static_cast<std::size_t>(rows - 1));
        for (Eigen::Index t = 1; t < rows; ++t) inc[static_cast<std::size_t>(t - 1)] = probs(t, k) - probs(t - 1, k);
        CoordinateRegularity c;
        try {
            c.estimate = estimate_hurst(inc);
        } catch (const DomainError& e) {
            c.error = e.what();
        }
        report.coordinates.push_back(std::move(c));
    }
    return report;
}

SelfSimilarityReport self_similarity_check(HurstIndex h, double a, double t, std::size_t num_draws,
                                           Seed seed) {
    if (!(a > 0.0)) throw DomainError("scale factor a must be > 0");
    if (!(t > 0.0)) throw DomainError("time t must be > 0");
    if (num_draws < 2) throw DomainError("num_draws must be >= 2");
    const double at = a * t;
    std::vector<double> pts{0.0};
    if (at == t) pts.push_back(t);
    else if (at > t) pts.insert(pts.end(), {t, at});
    else pts.insert(pts.end(), {at, t});
    const TimeGrid grid(pts);
    const std::size_t it = at < t ? 2 : 1;
    const std::size_t iat = at > t ? 2 : 1;

    FbmSampler sampler(grid, h);
    Rng rng(seed);
    double st = 0.0, sat = 0.0;
    for (std::size_t d = 0; d < num_draws; ++d) {
        const Eigen::VectorXd v = sampler.sample_values(rng);
        st += v(static_cast<Eigen::Index>(it)) * v(static_cast<Eigen::Index>(it));
        sat += v(static_cast<Eigen::Index>(iat)) * v(static_cast<Eigen::Index>(iat));
    }
    SelfSimilarityReport r;
    r.h = h;
    r.a = a;
    r.t = t;
    r.num_draws = num_draws;
    r.seed = seed;
    r.var_t = st / static_cast<double>(num_draws);
    r.var_at = sat / static_cast<double>(num_draws);
    r.ratio = r.var_at / (std::pow(a, h.twice()) * r.var_t);
    return r;
}

std::vector<double> sample_autocovariance(std::span<const double> x, std::size_t max_lag, bool centered) {
    if (x.size() <= max_lag) throw DomainError("series shorter than the requested lag");
    double mean = 0.0;
    if (centered) {
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
    }
    std::vector<double> out(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
        out[lag] = s / static_cast<double>(x.size());
    }
    return out;
}

}  // namespace cftm
