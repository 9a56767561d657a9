#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "cftm/corpus.hpp"
#include "cftm/fbm.hpp"
#include "cftm/generative.hpp"
#include "cftm/likelihood.hpp"
#include "cftm/random.hpp"

namespace cftm {

/// Corpus flattened to one (time, word) pair per token, in bag order.
struct TokenList {
    std::vector<std::size_t> time;
    std::vector<WordId> word;
    std::size_t num_times = 0;
    std::size_t vocab_size = 0;

    static TokenList from(const Corpus& corpus);
    std::size_t size() const noexcept { return word.size(); }
};

/// Covariance nu + sigma^2 * Cov_fBm(s_i, s_j) of a latent path over a grid,
/// factorized once.
struct PathCovariance {
    Eigen::MatrixXd cov;
    CholeskyFactor chol;

    static std::shared_ptr<const PathCovariance> build(const TimeGrid& grid, HurstIndex h,
                                                       double nu, double sigma);
};

/// Gaussian prior over a P x D block whose D columns are independent paths
/// sharing one P x P covariance. An alpha path is P = T+1, D = 1; a static
/// beta row is P = 1, D = W; an evolving beta block is P = T+1, D = W.
class GaussianPathPrior {
public:
    GaussianPathPrior(Eigen::MatrixXd mean, std::shared_ptr<const PathCovariance> cov);

    const Eigen::MatrixXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& cov() const noexcept { return cov_->cov; }
    const Eigen::MatrixXd& chol() const noexcept { return cov_->chol.lower; }

    /// Zero-mean draw L * Z.
    Eigen::MatrixXd sample_centered(Rng& rng) const;
    Eigen::MatrixXd sample(Rng& rng) const { return mean_ + sample_centered(rng); }
    /// Unnormalized log density (quadratic form only).
    double log_density(const Eigen::MatrixXd& x) const;

private:
    Eigen::MatrixXd mean_;
    std::shared_ptr<const PathCovariance> cov_;
};

struct ModelPriors {
    std::vector<GaussianPathPrior> alpha;  // per topic, (T+1) x 1
    std::vector<GaussianPathPrior> beta;   // per topic, 1 x W or (T+1) x W
};

/// alpha priors use nu_alpha + sigma_alpha^2 fBm; beta priors are N(mu, nu_beta I)
/// when static, or the fBm path prior per word when evolving.
ModelPriors build_priors(const ModelConfig& config, const TimeGrid& grid);

struct ModelState {
    Eigen::MatrixXd alpha;               // (T+1) x K
    std::vector<Eigen::MatrixXd> beta;   // one K x W block, or T+1 when evolving
    std::vector<std::size_t> z;          // per token, 0-based topic
    std::size_t iteration = 0;

    // Caches kept in step with z.
    Eigen::MatrixXi time_topic;                 // (T+1) x K token counts
    std::vector<Eigen::MatrixXi> topic_word;    // same layout as beta

    std::size_t num_topics() const noexcept { return static_cast<std::size_t>(alpha.cols()); }
    const Eigen::MatrixXd& beta_at(std::size_t t) const { return beta.size() == 1 ? beta[0] : beta[t]; }

    void recount(const TokenList& tokens);
    bool counts_consistent(const TokenList& tokens) const;
};

/// p(z = k | w, alpha_t, beta_t) proportional to softmax(alpha_t)_k softmax(beta_{t,k})_w.
Eigen::VectorXd topic_conditional(const Eigen::VectorXd& alpha_t, const Eigen::MatrixXd& beta_t,
                                  WordId w);

/// Resamples every z from its exact conditional given the current paths.
void gibbs_sweep_z(ModelState& state, const TokenList& tokens, Rng& rng);

/// sum_t [ sum_k n_tk alpha_tk - N_t logsumexp(alpha_t) ].
double alpha_log_likelihood(const Eigen::MatrixXd& alpha, const Eigen::MatrixXi& time_topic);

/// Likelihood of one topic's beta block (P x W) given its word counts.
double beta_block_log_likelihood(const Eigen::MatrixXd& block, const std::vector<Eigen::MatrixXi>& topic_word,
                                 std::size_t topic);

/// log p(corpus | alpha, beta) with z summed out.
double data_log_likelihood(const ModelState& state, const TokenList& tokens);

/// Elliptical slice update of `x` under `prior` and `log_lik`. Returns the
/// number of shrink steps. Throws NumericalError (with a state dump in the
/// message) when shrinking exceeds max_shrink.
std::size_t elliptical_slice(Eigen::MatrixXd& x, const GaussianPathPrior& prior,
                             const std::function<double(const Eigen::MatrixXd&)>& log_lik,
                             Rng& rng, std::size_t max_shrink);

/// One ESS update per topic path alpha_{., k}. Returns total shrink steps.
std::size_t ess_update_alpha(ModelState& state, const ModelPriors& priors, Rng& rng,
                             std::size_t max_shrink);
/// One ESS update per topic's beta block.
std::size_t ess_update_beta(ModelState& state, const ModelPriors& priors, Rng& rng,
                            std::size_t max_shrink);

/// Random-walk Metropolis fallback with prior-shaped proposals x + scale * L Z.
/// `scales` holds one step size per topic; returns acceptances.
std::size_t rwm_update_alpha(ModelState& state, const ModelPriors& priors,
                             const std::vector<double>& scales, Rng& rng,
                             std::vector<bool>* accepted = nullptr);
std::size_t rwm_update_beta(ModelState& state, const ModelPriors& priors,
                            const std::vector<double>& scales, Rng& rng,
                            std::vector<bool>* accepted = nullptr);

/// Block extraction/insertion between ModelState and the P x W prior layout.
Eigen::MatrixXd beta_block(const ModelState& state, std::size_t topic);
void set_beta_block(ModelState& state, std::size_t topic, const Eigen::MatrixXd& block);

}  // namespace cftm
