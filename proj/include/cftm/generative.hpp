#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cftm/corpus.hpp"
#include "cftm/fbm.hpp"
#include "cftm/random.hpp"

namespace cftm {

/// Numerically stable softmax (max-subtracted). Throws DomainError on empty input.
std::vector<double> softmax(std::span<const double> logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Eigen::VectorXd& values);

/// log prod_v phi_v^{x_v} for a one-hot x. A zero probability at the active
/// index yields -infinity.
double categorical_logpdf(std::span<const double> onehot, std::span<const double> phi);

/// Index v drawn with probability phi[v] (0-based).
std::size_t sample_categorical(std::span<const double> phi, Rng& rng);

/// Drift term f(x) = intercept + slope * x of the parameter SDE. Only the
/// zero drift is part of the supported model; linear drift is experimental
/// and solved by Euler-Maruyama.
struct Drift {
    double intercept = 0.0;
    double slope = 0.0;

    bool is_zero() const noexcept { return intercept == 0.0 && slope == 0.0; }
    double operator()(double x) const noexcept { return intercept + slope * x; }
};

/// (mu, nu, sigma, drift) of one parameter family. mu holds one entry per
/// coordinate: K for alpha, K*W (topic-major) for beta.
struct SdeParams {
    std::vector<double> mu;
    double nu = 1.0;
    double sigma = 0.0;
    Drift drift;

    void validate(std::size_t expected_mu, const char* name) const;
};

/// Deterministic shift added to alpha from `time` onward. Used to build
/// synthetic corpora with a known regime change; not part of the SDE.
struct RegimeSwitch {
    double time = 0.0;
    std::vector<double> alpha_shift;  // K entries
};

struct ModelConfig {
    std::size_t num_topics = 1;
    std::size_t vocab_size = 2;
    HurstIndex h{0.5};
    TimeGrid grid{std::vector<double>{0.0}};
    SdeParams alpha;
    SdeParams beta;
    bool beta_evolves = false;
    std::vector<std::size_t> tokens_per_time;  // one per grid point
    std::optional<RegimeSwitch> regime_switch;

    std::size_t num_times() const noexcept { return grid.size(); }
    bool zero_drift() const noexcept { return alpha.drift.is_zero() && beta.drift.is_zero(); }
    void validate() const;
};

/// Builds a config with zero means, the given variances and constant token counts.
ModelConfig make_config(std::size_t num_topics, std::size_t vocab_size, HurstIndex h,
                        TimeGrid grid, double nu_alpha, double sigma_alpha, double nu_beta,
                        double sigma_beta, std::size_t tokens_per_time = 200);

/// Realized generative parameters. alpha is (T+1) x K. beta holds one K x W
/// matrix when static, or T+1 of them when evolving.
struct ParamPath {
    Eigen::MatrixXd alpha;
    std::vector<Eigen::MatrixXd> beta;

    bool beta_evolves() const noexcept { return beta.size() > 1; }
    const Eigen::MatrixXd& beta_at(std::size_t t) const { return beta.size() == 1 ? beta[0] : beta[t]; }
    bool all_finite() const;
};

/// Independent fBm paths on the config grid: one per topic for alpha, one per
/// (topic, word) pair for beta when beta evolves (index k * W + w).
struct PathNoise {
    std::vector<Eigen::VectorXd> alpha;
    std::vector<Eigen::VectorXd> beta;
};

/// fBm source for a grid: circulant embedding on equispaced grids, Cholesky otherwise.
class FbmGenerator {
public:
    FbmGenerator(const TimeGrid& grid, HurstIndex h);
    Eigen::VectorXd sample(Rng& rng) const;

private:
    std::size_t points_;
    double scale_ = 1.0;
    std::optional<FgnSpectralSampler> spectral_;
    std::optional<FbmSampler> exact_;
};

PathNoise draw_path_noise(const ModelConfig& config, Rng& rng);

/// Solves the parameter SDEs on the grid. Initial values alpha_0 ~ N(mu, nu I)
/// and beta_0 ~ N(mu, nu I) are drawn from `rng` in that order (K normals then
/// K*W normals). Under zero drift the result is alpha_0 + sigma * B exactly;
/// otherwise Euler-Maruyama driven by the fBm increments. The regime switch,
/// if any, is applied afterwards.
ParamPath solve_paths(const ModelConfig& config, const PathNoise& noise, Rng& rng);

/// draw_path_noise + solve_paths on child streams seeded by one draw from `rng`.
ParamPath sample_param_path(const ModelConfig& config, Rng& rng);

struct SyntheticCorpus {
    Corpus corpus;
    Vocabulary vocabulary;  // "w01".."wW", id order
    ParamPath truth;
    std::vector<std::vector<std::size_t>> assignments;  // z per token, aligned with corpus.bags
    Seed seed = 0;
};

/// Generates N_{s_t} tokens per grid point: z ~ Cat(softmax(alpha_t)),
/// w ~ Cat(softmax(beta_{t,z})).
SyntheticCorpus generate_corpus(const ModelConfig& config, Seed seed);

/// Token generation given fixed parameters.
SyntheticCorpus generate_corpus_from_paths(const ModelConfig& config, const ParamPath& truth,
                                           Rng& rng);

/// Names used for synthetic vocabularies, zero-padded so lexicographic order matches id order.
std::string synthetic_word(WordId id, std::size_t vocab_size);

}  // namespace cftm
