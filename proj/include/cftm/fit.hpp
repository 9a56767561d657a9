#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cftm/corpus.hpp"
#include "cftm/generative.hpp"
#include "cftm/random.hpp"
#include "cftm/sampler.hpp"

namespace cftm {

enum class SamplerKind { ess, rwm };

struct FitConfig {
    std::size_t iterations = 2000;
    std::size_t burn_in = 1000;
    std::size_t thinning = 2;
    Seed seed = 0;
    std::size_t ess_max_shrink_iters = 200;
    SamplerKind sampler = SamplerKind::ess;
    double rwm_initial_scale = 0.1;
    bool freeze_beta = false;
    std::size_t chains = 1;
    std::size_t top_words = 10;

    void validate() const;
};

/// What one MCMC transition does; shared by fit() and the sampler tests.
struct TransitionOptions {
    SamplerKind sampler = SamplerKind::ess;
    bool freeze_beta = false;
    std::size_t max_shrink = 200;
    std::vector<double> alpha_scales;  // rwm only
    std::vector<double> beta_scales;
};

/// Gibbs on z, then alpha, then beta (unless frozen).
void mcmc_transition(ModelState& state, const TokenList& tokens, const ModelPriors& priors,
                     TransitionOptions& options, Rng& rng);

struct TopWord {
    WordId word = 0;
    double probability = 0.0;
};

struct FitReport {
    ModelConfig config;  // grid replaced by the corpus grid
    FitConfig fit_config;
    Eigen::MatrixXd topic_dist;     // (T+1) x K posterior mean of softmax(alpha_t)
    Eigen::MatrixXd topic_dist_sd;  // posterior standard deviation, same shape
    std::vector<Eigen::MatrixXd> topic_dist_samples;  // kept draws (chain 0)
    Eigen::MatrixXd word_dist;      // K x W posterior mean of softmax(beta_k), averaged over time
    std::vector<std::vector<TopWord>> top_words;
    std::vector<std::vector<double>> loglik_traces;  // one per chain
    std::vector<Seed> chain_seeds;
    std::size_t kept_samples = 0;  // per chain
    double mean_shrinks = 0.0;     // ESS shrink steps per iteration (chain 0)
    std::vector<double> acceptance;  // rwm acceptance per topic (chain 0)

    const std::vector<double>& loglik_trace() const { return loglik_traces.front(); }
};

/// Runs the sampler(s). Throws DomainError for an empty corpus or mismatched
/// vocabulary and PreconditionError when drift is nonzero.
FitReport fit(const Corpus& corpus, const ModelConfig& config, const FitConfig& fit_config);

/// Ranked words per topic from a K x W probability matrix; ties go to the lower id.
std::vector<std::vector<TopWord>> rank_top_words(const Eigen::MatrixXd& word_dist, std::size_t count);

struct TopicMatch {
    std::vector<std::size_t> permutation;  // estimate column for each truth column
    double correlation = 0.0;              // mean per-topic Pearson r over time
};

/// Best relabeling of `estimate` columns against `truth` (both (T+1) x K), by
/// enumerating all K! permutations.
TopicMatch match_topics(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Posterior z-score of mean(p_post) - mean(p_pre) for one topic, where pre
/// and post split the grid at `switch_time`.
double regime_shift_zscore(const FitReport& report, std::size_t topic, double switch_time);

/// Largest |p_{t+1,k} - p_{t,k}| of a topic trajectory table.
double max_step_change(const Eigen::MatrixXd& topic_dist);

/// Largest single step of the posterior-mean trajectory and the pre/post
/// z-score of every topic when the grid is split where that step lands.
struct TrajectorySummary {
    double max_step_change = 0.0;
    std::size_t max_step_index = 0;  // time index the largest step arrives at
    std::vector<double> shift_zscore;  // empty with fewer than two kept samples
};

TrajectorySummary summarize_trajectory(const FitReport& report);

/// Truth topic proportions softmax(alpha_t) per row.
Eigen::MatrixXd topic_proportions(const Eigen::MatrixXd& alpha);

enum class GridObjective { per_word, per_time_joint };

struct GridPoint {
    double sigma_alpha = 0.0;
    double nu_alpha = 1.0;
};

struct GridScore {
    GridPoint point;
    double total = 0.0;
    std::vector<double> per_time;
};

struct GridSearchResult {
    std::size_t best = 0;  // index into table (input order)
    ModelConfig best_config;
    std::vector<GridScore> table;
};

/// Scores each (sigma_alpha, nu_alpha) by sum_t L_{s_t} with common random
/// numbers and returns the argmax. Ties go to smaller sigma_alpha, then smaller
/// nu_alpha, then earlier position.
GridSearchResult fit_hyperparams_grid(const Corpus& corpus, const ModelConfig& base,
                                      const std::vector<GridPoint>& grid, std::size_t num_mc,
                                      Seed seed, GridObjective objective = GridObjective::per_word);

const char* to_string(SamplerKind kind);
const char* to_string(GridObjective objective);

}  // namespace cftm
