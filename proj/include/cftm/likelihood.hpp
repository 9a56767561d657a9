#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cftm/corpus.hpp"
#include "cftm/generative.hpp"
#include "cftm/random.hpp"

namespace cftm {

/// Standard normal draws behind the Monte Carlo word-probability estimator:
/// num_mc rows, K columns for alpha and K*W (topic-major) for beta.
struct StandardNormals {
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd beta;

    std::size_t count() const noexcept { return static_cast<std::size_t>(alpha.rows()); }
};

StandardNormals draw_standard_normals(std::size_t num_topics, std::size_t vocab_size,
                                      std::size_t num_mc, Rng& rng);

/// Marginal standard deviations of alpha_s and beta_s under zero drift:
/// sqrt(nu + sigma^2 s^{2H}); beta stays at sqrt(nu) unless it evolves.
struct MarginalScale {
    double alpha = 0.0;
    double beta = 0.0;
};
MarginalScale marginal_scale(const ModelConfig& config, double s);

/// log sum_k softmax(alpha)_k softmax(beta_k)_w for every word w, computed in
/// the log domain. beta is K x W.
Eigen::VectorXd log_word_probs(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& beta);

/// Per-draw log word probabilities, num_mc x W, at time s.
Eigen::MatrixXd per_draw_log_word_probs(const ModelConfig& config, double s,
                                        const StandardNormals& normals);

struct WordLogProbs {
    Eigen::VectorXd log_prob;   // log of the Monte Carlo mean, per word
    Eigen::VectorXd std_error;  // delta-method standard error of log_prob
};

WordLogProbs word_log_probs(const ModelConfig& config, double s, const StandardNormals& normals);

/// Monte Carlo estimate of log p(w_s | Phi). Requires zero drift.
double word_log_prob(WordId w, double s, const ModelConfig& config, std::size_t num_mc, Rng& rng);

/// L_{s_t}(Phi) = sum over tokens of word_log_prob, one entry per timestamp.
/// One set of normals is drawn and shared by every timestamp.
std::vector<double> corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                          std::size_t num_mc, Rng& rng);
std::vector<double> corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                          const StandardNormals& normals);

/// Per-timestamp joint marginal log p(d_t | Phi) = log E[prod_tokens p(w | alpha_s, beta_s)],
/// where tokens at one timestamp share a single (alpha_s, beta_s) draw.
std::vector<double> joint_corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                                const StandardNormals& normals);

/// Compares the bag log-likelihood at time s computed two ways: (a) through
/// solve_paths on the grid {0, s} and (b) through the static Gaussian marginal
/// N(mu, nu + sigma^2 s^{2H}). Both routes consume the same stream for the
/// initial-value normals.
struct LdaEquivalenceReport {
    double time = 0.0;
    std::size_t num_mc = 0;
    double path_log_lik = 0.0;
    double static_log_lik = 0.0;
    double gap = 0.0;
    double path_std_error = 0.0;
    double static_std_error = 0.0;
    double combined_std_error = 0.0;
    Eigen::VectorXd path_word_log_prob;
    Eigen::VectorXd static_word_log_prob;
    bool agrees = false;  // gap <= 2 * combined_std_error, or gap < 1e-12
};

LdaEquivalenceReport lda_equivalence_check(const ModelConfig& config, double s,
                                           const std::vector<std::size_t>& word_counts,
                                           std::size_t num_mc, Seed seed);

LdaEquivalenceReport lda_equivalence_check(const Corpus& corpus, std::size_t time_index,
                                           const ModelConfig& config, std::size_t num_mc,
                                           Seed seed);

}  // namespace cftm
