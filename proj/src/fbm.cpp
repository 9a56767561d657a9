#include "cftm/fbm.hpp"

#include <cmath>
#include <complex>
#include <iostream>
#include <string>

#include <unsupported/Eigen/FFT>

#include "cftm/error.hpp"

namespace cftm {

HurstIndex::HurstIndex(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
        throw DomainError("Hurst index must lie in (0,1), got " + std::to_string(value));
    }
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw DomainError("time grid must contain at least one point");
    if (points_.front() != 0.0) throw DomainError("time grid must start at 0");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i] > points_[i - 1]) || !std::isfinite(points_[i])) {
            throw DomainError("time grid must be strictly increasing (index " + std::to_string(i) +
                              ")");
        }
    }
}

TimeGrid TimeGrid::uniform(std::size_t n, double step) {
    if (!(step > 0.0)) throw DomainError("grid step must be positive");
    std::vector<double> pts(n + 1);
    for (std::size_t i = 0; i <= n; ++i) pts[i] = static_cast<double>(i) * step;
    return TimeGrid(std::move(pts));
}

bool TimeGrid::is_equispaced() const {
    if (points_.size() < 3) return true;
    const double step = points_[1] - points_[0];
    for (std::size_t i = 2; i < points_.size(); ++i) {
        if (std::abs((points_[i] - points_[i - 1]) - step) > 1e-9 * step) return false;
    }
    return true;
}

double fbm_cov(double s, double t, HurstIndex h) {
    if (s < 0.0 || t < 0.0) throw DomainError("fBm covariance requires nonnegative times");
    const double e = h.twice();
    if (s == t) return std::pow(t, e);
    return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

FbmCovariance build_covariance(const TimeGrid& grid, HurstIndex h) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            m(i, j) = m(j, i) = fbm_cov(grid[i], grid[j], h);
        }
    }
    return {grid, h, std::move(m)};
}

CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& cov) {
    if (cov.rows() == 0) return {};
    const double scale = cov.diagonal().maxCoeff();
    if (!(scale > 0.0)) throw NumericalError("covariance has no positive diagonal entry");
    for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
        Eigen::MatrixXd work = cov;
        work.diagonal().array() += rel * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd lower = llt.matrixL();
            if (lower.allFinite()) return {std::move(lower), rel * scale};
        }
    }
    throw NumericalError("covariance factorization failed after jitter escalation to 1e-6");
}

FbmSampler::FbmSampler(TimeGrid grid, HurstIndex h) : grid_(std::move(grid)), h_(h) {
    const auto n = static_cast<Eigen::Index>(grid_.size()) - 1;
    if (n > 0) {
        const Eigen::MatrixXd full = build_covariance(grid_, h_).matrix;
        factor_ = cholesky_with_jitter(full.bottomRightCorner(n, n));
    }
}

Eigen::VectorXd FbmSampler::values_from_normals(const Eigen::VectorXd& normals) const {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (n > 1) out.tail(n - 1).noalias() = factor_.lower.triangularView<Eigen::Lower>() * normals;
    return out;
}

Eigen::VectorXd FbmSampler::sample_values(Rng& rng) const {
    const auto n = static_cast<Eigen::Index>(grid_.size()) - 1;
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    return values_from_normals(z);
}

FbmPath FbmSampler::sample(Rng& rng) const {
    const Seed seed = rng.seed();
    Eigen::VectorXd v = sample_values(rng);
    return {grid_, std::vector<double>(v.data(), v.data() + v.size()), seed};
}

FbmPath sample_fbm_exact(const TimeGrid& grid, HurstIndex h, Rng& rng) {
    return FbmSampler(grid, h).sample(rng);
}

double fgn_autocov(std::size_t lag, HurstIndex h) {
    const double e = h.twice();
    const double k = static_cast<double>(lag);
    if (lag == 0) return 1.0;
    return 0.5 * (std::pow(k + 1.0, e) + std::pow(k - 1.0, e) - 2.0 * std::pow(k, e));
}

FgnSpectralSampler::FgnSpectralSampler(std::size_t n, HurstIndex h) : n_(n), h_(h) {
    if (n == 0) throw DomainError("fGn length must be at least 1");
    const std::size_t m = 2 * n;
    std::vector<std::complex<double>> row(m), eig;
    for (std::size_t k = 0; k <= n; ++k) row[k] = fgn_autocov(k, h);
    for (std::size_t k = n + 1; k < m; ++k) row[k] = row[m - k];
    Eigen::FFT<double> fft;
    fft.fwd(eig, row);

    double max_eig = 0.0;
    for (const auto& v : eig) max_eig = std::max(max_eig, v.real());
    sqrt_eigen_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double lambda = eig[k].real();
        if (lambda < -1e-10 * max_eig) {
            std::cerr << "warning: circulant embedding has negative eigenvalue " << lambda
                      << " (n=" << n << ", H=" << h.value()
                      << "); using exact Cholesky sampler\n";
            sqrt_eigen_.clear();
            fallback_ = std::make_unique<FbmSampler>(TimeGrid::uniform(n), h);
            return;
        }
        sqrt_eigen_[k] = std::sqrt(std::max(lambda, 0.0) / static_cast<double>(m));
    }
}

std::vector<double> FgnSpectralSampler::sample(Rng& rng) const {
    std::vector<double> out(n_);
    if (fallback_) {
        const Eigen::VectorXd path = fallback_->sample_values(rng);
        for (std::size_t i = 0; i < n_; ++i) out[i] = path(i + 1) - path(i);
        return out;
    }
    const std::size_t m = 2 * n_;
    std::vector<std::complex<double>> weighted(m), transformed;
    for (std::size_t k = 0; k < m; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        weighted[k] = sqrt_eigen_[k] * std::complex<double>(re, im);
    }
    Eigen::FFT<double> fft;
    fft.fwd(transformed, weighted);
    for (std::size_t i = 0; i < n_; ++i) out[i] = transformed[i].real();
    return out;
}

std::vector<double> sample_fgn_spectral(std::size_t n, HurstIndex h, Rng& rng) {
    return FgnSpectralSampler(n, h).sample(rng);
}

std::vector<double> cumulative_path(std::span<const double> increments) {
    std::vector<double> path(increments.size() + 1, 0.0);
    for (std::size_t i = 0; i < increments.size(); ++i) path[i + 1] = path[i] + increments[i];
    return path;
}

}  // namespace cftm
