#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cftm/random.hpp"

namespace cftm {

/// Hurst index H, strictly inside (0, 1).
class HurstIndex {
public:
    explicit HurstIndex(double value);

    double value() const noexcept { return value_; }
    double twice() const noexcept { return 2.0 * value_; }

private:
    double value_;
};

/// Observation timestamps. Strictly increasing, starting at 0; the spacing
/// may be nonuniform.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> points);

    /// 0, step, 2*step, ..., n*step (n + 1 points).
    static TimeGrid uniform(std::size_t n, double step = 1.0);

    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    std::span<const double> points() const noexcept { return points_; }
    double back() const { return points_.back(); }

    /// True when all gaps equal the first gap to within a relative 1e-9.
    bool is_equispaced() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::vector<double> points_;
};

/// Cov(B_s, B_t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2. Throws DomainError on negative time.
double fbm_cov(double s, double t, HurstIndex h);

struct FbmCovariance {
    TimeGrid grid;
    HurstIndex h;
    Eigen::MatrixXd matrix;
};

FbmCovariance build_covariance(const TimeGrid& grid, HurstIndex h);

/// Lower Cholesky factor of a covariance matrix together with the diagonal
/// jitter that was needed to obtain it.
struct CholeskyFactor {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

/// Factors `cov` after adding 1e-10 * max(diag) to the diagonal, escalating
/// by x10 up to 1e-6 * max(diag). Throws NumericalError past that.
CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& cov);

struct FbmPath {
    TimeGrid grid;
    std::vector<double> values;
    Seed seed = 0;
};

/// Exact fBm sampler for a fixed grid. Factorizes once; safe to share
/// across threads as long as each thread brings its own Rng.
class FbmSampler {
public:
    FbmSampler(TimeGrid grid, HurstIndex h);

    const TimeGrid& grid() const noexcept { return grid_; }
    HurstIndex hurst() const noexcept { return h_; }
    double jitter() const noexcept { return factor_.jitter; }

    /// Path values on the grid; element 0 is always exactly 0.
    Eigen::VectorXd sample_values(Rng& rng) const;

    /// Same as sample_values but driven by caller-supplied standard normals
    /// (length grid().size() - 1).
    Eigen::VectorXd values_from_normals(const Eigen::VectorXd& normals) const;

    FbmPath sample(Rng& rng) const;

private:
    TimeGrid grid_;
    HurstIndex h_;
    CholeskyFactor factor_;  // over grid points 1..n; the t=0 row is dropped
};

FbmPath sample_fbm_exact(const TimeGrid& grid, HurstIndex h, Rng& rng);

/// Autocovariance of unit-step fGn at integer lag k >= 0.
double fgn_autocov(std::size_t lag, HurstIndex h);

/// Circulant-embedding (Davies-Harte) fGn sampler for n unit steps.
class FgnSpectralSampler {
public:
    FgnSpectralSampler(std::size_t n, HurstIndex h);

    std::size_t size() const noexcept { return n_; }
    /// False when the embedding had a negative eigenvalue and sampling
    /// goes through the exact Cholesky path instead.
    bool uses_fft() const noexcept { return !fallback_; }

    std::vector<double> sample(Rng& rng) const;

private:
    std::size_t n_;
    HurstIndex h_;
    std::vector<double> sqrt_eigen_;  // sqrt(lambda_k / m), m = 2n
    std::unique_ptr<FbmSampler> fallback_;
};

/// n increments of unit-step fGn. Partial sums give fBm on 0..n.
std::vector<double> sample_fgn_spectral(std::size_t n, HurstIndex h, Rng& rng);

/// Cumulative sum with a leading zero: increments -> path.
std::vector<double> cumulative_path(std::span<const double> increments);

}  // namespace cftm
