#include "cftm/fit.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "cftm/error.hpp"
#include "cftm/likelihood.hpp"

namespace cftm {
namespace {

struct ChainResult {
    Seed seed = 0;
    Eigen::MatrixXd topic_sum, topic_sumsq, word_sum;
    std::vector<Eigen::MatrixXd> samples;
    std::vector<double> trace;
    std::size_t kept = 0;
    double mean_shrinks = 0.0;
    std::vector<double> acceptance;
};

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.row(r) = softmax(Eigen::VectorXd(m.row(r).transpose())).transpose();
    return out;
}

ChainResult run_chain(const TokenList& tokens, const ModelConfig& config, const ModelPriors& priors,
                      const FitConfig& fc, Seed seed) {
    const auto K = static_cast<Eigen::Index>(config.num_topics);
    const auto W = static_cast<Eigen::Index>(config.vocab_size);
    Rng rng(seed);
    Rng init = rng.child(0);

    ModelState state;
    state.alpha.resize(static_cast<Eigen::Index>(tokens.num_times), K);
    for (Eigen::Index k = 0; k < K; ++k) state.alpha.col(k) = priors.alpha[static_cast<std::size_t>(k)].mean().col(0);
    const std::size_t blocks = config.beta_evolves ? tokens.num_times : 1;
    state.beta.assign(blocks, Eigen::MatrixXd(K, W));
    for (std::size_t k = 0; k < config.num_topics; ++k) {
        const auto& prior = priors.beta[k];
        set_beta_block(state, k, fc.freeze_beta ? prior.mean() : prior.sample(init));
    }
    state.z.resize(tokens.size());
    for (auto& z : state.z) z = static_cast<std::size_t>(init.uniform() * static_cast<double>(K)) % config.num_topics;
    state.recount(tokens);

    TransitionOptions opts;
    opts.sampler = fc.sampler;
    opts.freeze_beta = fc.freeze_beta;
    opts.max_shrink = fc.ess_max_shrink_iters;
    opts.alpha_scales.assign(config.num_topics, fc.rwm_initial_scale);
    opts.beta_scales.assign(config.num_topics, fc.rwm_initial_scale);

    ChainResult out;
    out.seed = seed;
    out.topic_sum = Eigen::MatrixXd::Zero(state.alpha.rows(), K);
    out.topic_sumsq = out.topic_sum;
    out.word_sum = Eigen::MatrixXd::Zero(K, W);
    out.trace.reserve(fc.iterations);

    Rng step_rng = rng.child(1);
    std::vector<std::size_t> accept_window(2 * config.num_topics, 0);
    std::vector<std::size_t> accept_total(config.num_topics, 0);
    std::size_t shrink_total = 0;
    for (std::size_t it = 0; it < fc.iterations; ++it) {
        if (fc.sampler == SamplerKind::ess) {
            gibbs_sweep_z(state, tokens, step_rng);
            shrink_total += ess_update_alpha(state, priors, step_rng, fc.ess_max_shrink_iters);
            if (!fc.freeze_beta) shrink_total += ess_update_beta(state, priors, step_rng, fc.ess_max_shrink_iters);
        } else {
            gibbs_sweep_z(state, tokens, step_rng);
            std::vector<bool> acc;
            rwm_update_alpha(state, priors, opts.alpha_scales, step_rng, &acc);
            for (std::size_t k = 0; k < acc.size(); ++k) accept_window[k] += acc[k], accept_total[k] += acc[k];
            if (!fc.freeze_beta) {
                rwm_update_beta(state, priors, opts.beta_scales, step_rng, &acc);
                for (std::size_t k = 0; k < acc.size(); ++k) accept_window[config.num_topics + k] += acc[k];
            }
            // Adapt toward 20-40% acceptance every 50 burn-in iterations.
            if (it < fc.burn_in && (it + 1) % 50 == 0) {
                for (std::size_t k = 0; k < 2 * config.num_topics; ++k) {
                    double& scale = k < config.num_topics ? opts.alpha_scales[k] : opts.beta_scales[k - config.num_topics];
                    const double rate = static_cast<double>(accept_window[k]) / 50.0;
                    if (rate < 0.2) scale *= 0.7;
                    else if (rate > 0.4) scale *= 1.4;
                    accept_window[k] = 0;
                }
            }
        }
        ++state.iteration;
        out.trace.push_back(data_log_likelihood(state, tokens));

        if (it >= fc.burn_in && (it - fc.burn_in) % fc.thinning == 0) {
            const Eigen::MatrixXd p = softmax_rows(state.alpha);
            out.topic_sum += p;
            out.topic_sumsq += p.array().square().matrix();
            out.samples.push_back(p);
            Eigen::MatrixXd words = Eigen::MatrixXd::Zero(K, W);
            for (const auto& b : state.beta) words += softmax_rows(b);
            out.word_sum += words / static_cast<double>(state.beta.size());
            ++out.kept;
        }
    }
    out.mean_shrinks = static_cast<double>(shrink_total) / static_cast<double>(fc.iterations);
    if (fc.sampler == SamplerKind::rwm) {
        for (std::size_t k = 0; k < config.num_topics; ++k) {
            out.acceptance.push_back(static_cast<double>(accept_total[k]) / static_cast<double>(fc.iterations));
        }
    }
    return out;
}

}  // namespace

const char* to_string(SamplerKind kind) { return kind == SamplerKind::ess ? "ess" : "rwm"; }

const char* to_string(GridObjective objective) {
    return objective == GridObjective::per_word ? "per_word" : "per_time_joint";
}

void FitConfig::validate() const {
    if (iterations < 1) throw DomainError("iterations must be >= 1");
    if (burn_in >= iterations) throw DomainError("burn_in must be smaller than iterations");
    if (thinning < 1) throw DomainError("thinning must be >= 1");
    if (chains < 1) throw DomainError("chains must be >= 1");
    if (ess_max_shrink_iters < 1) throw DomainError("ess_max_shrink_iters must be >= 1");
    if (!(rwm_initial_scale > 0.0)) throw DomainError("rwm_initial_scale must be > 0");
}

void mcmc_transition(ModelState& state, const TokenList& tokens, const ModelPriors& priors,
                     TransitionOptions& options, Rng& rng) {
    gibbs_sweep_z(state, tokens, rng);
    if (options.sampler == SamplerKind::ess) {
        ess_update_alpha(state, priors, rng, options.max_shrink);
        if (!options.freeze_beta) ess_update_beta(state, priors, rng, options.max_shrink);
    } else {
        if (options.alpha_scales.empty()) options.alpha_scales.assign(state.num_topics(), 0.1);
        if (options.beta_scales.empty()) options.beta_scales.assign(state.num_topics(), 0.1);
        rwm_update_alpha(state, priors, options.alpha_scales, rng);
        if (!options.freeze_beta) rwm_update_beta(state, priors, options.beta_scales, rng);
    }
    ++state.iteration;
}

std::vector<std::vector<TopWord>> rank_top_words(const Eigen::MatrixXd& word_dist, std::size_t count) {
    std::vector<std::vector<TopWord>> out;
    const auto W = static_cast<std::size_t>(word_dist.cols());
    for (Eigen::Index k = 0; k < word_dist.rows(); ++k) {
        std::vector<WordId> ids(W);
        std::iota(ids.begin(), ids.end(), WordId{0});
        std::stable_sort(ids.begin(), ids.end(), [&](WordId a, WordId b) {
            return word_dist(k, static_cast<Eigen::Index>(a)) > word_dist(k, static_cast<Eigen::Index>(b));
        });
        std::vector<TopWord> top;
        for (std::size_t i = 0; i < std::min(count, W); ++i) {
            top.push_back({ids[i], word_dist(k, static_cast<Eigen::Index>(ids[i]))});
        }
        out.push_back(std::move(top));
    }
    return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd da = a.array() - a.mean(), db = b.array() - b.mean();
    const double denom = std::sqrt(da.square().sum() * db.square().sum());
    if (!(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (da * db).sum() / denom;
}

TopicMatch match_topics(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
        throw DomainError("topic tables differ in shape");
    }
    const auto K = static_cast<std::size_t>(truth.cols());
    if (K > 8) throw DomainError("permutation matching is limited to K <= 8");
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    TopicMatch best{perm, -std::numeric_limits<double>::infinity()};
    do {
        double sum = 0.0;
        std::size_t defined = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const double r = pearson(estimate.col(static_cast<Eigen::Index>(perm[k])), truth.col(static_cast<Eigen::Index>(k)));
            if (std::isfinite(r)) sum += r, ++defined;
        }
        const double score = defined ? sum / static_cast<double>(defined) : -1.0;
        if (score > best.correlation) best = {perm, score};
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double regime_shift_zscore(const FitReport& report, std::size_t topic, double switch_time) {
    const auto& grid = report.config.grid;
    const auto k = static_cast<Eigen::Index>(topic);
    std::vector<double> diffs;
    for (const auto& s : report.topic_dist_samples) {
        double pre = 0.0, post = 0.0;
        std::size_t npre = 0, npost = 0;
        for (std::size_t t = 0; t < grid.size(); ++t) {
            if (grid[t] < switch_time) pre += s(static_cast<Eigen::Index>(t), k), ++npre;
            else post += s(static_cast<Eigen::Index>(t), k), ++npost;
        }
        if (!npre || !npost) throw DomainError("switch time does not split the grid");
        diffs.push_back(post / static_cast<double>(npost) - pre / static_cast<double>(npre));
    }
    if (diffs.size() < 2) throw DomainError("need at least two kept samples");
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(diffs.size() - 1);
    return mean / std::sqrt(var);
}

double max_step_change(const Eigen::MatrixXd& topic_dist) {
    double best = 0.0;
    for (Eigen::Index t = 1; t < topic_dist.rows(); ++t) {
        best = std::max(best, (topic_dist.row(t) - topic_dist.row(t - 1)).cwiseAbs().maxCoeff());
    }
    return best;
}

TrajectorySummary summarize_trajectory(const FitReport& report) {
    TrajectorySummary out;
    const Eigen::MatrixXd& p = report.topic_dist;
    for (Eigen::Index t = 1; t < p.rows(); ++t) {
        const double step = (p.row(t) - p.row(t - 1)).cwiseAbs().maxCoeff();
        if (step > out.max_step_change) {
            out.max_step_change = step;
            out.max_step_index = static_cast<std::size_t>(t);
        }
    }
    if (out.max_step_index == 0 || report.topic_dist_samples.size() < 2) return out;
    const double split = report.config.grid[out.max_step_index];
    for (std::size_t k = 0; k < static_cast<std::size_t>(p.cols()); ++k) {
        out.shift_zscore.push_back(regime_shift_zscore(report, k, split));
    }
    return out;
}

Eigen::MatrixXd topic_proportions(const Eigen::MatrixXd& alpha) { return softmax_rows(alpha); }

FitReport fit(const Corpus& corpus, const ModelConfig& config_in, const FitConfig& fc) {
    fc.validate();
    if (corpus.num_tokens() == 0) throw DomainError("cannot fit an empty corpus");
    if (corpus.vocab_size != config_in.vocab_size) {
        throw DomainError("corpus vocabulary size " + std::to_string(corpus.vocab_size) +
                          " does not match model vocab_size " + std::to_string(config_in.vocab_size));
    }
    if (!config_in.zero_drift()) {
        throw PreconditionError("MCMC fitting needs zero drift (Gaussian path prior)");
    }
    ModelConfig config = config_in;
    config.grid = corpus.grid;
    config.tokens_per_time.assign(corpus.num_times(), 0);
    for (std::size_t t = 0; t < corpus.num_times(); ++t) config.tokens_per_time[t] = std::max<std::size_t>(corpus.bags[t].size(), 1);
    config.regime_switch.reset();
    config.validate();

    const TokenList tokens = TokenList::from(corpus);
    const ModelPriors priors = build_priors(config, config.grid);

    std::vector<Seed> seeds;
    for (std::size_t c = 0; c < fc.chains; ++c) seeds.push_back(derive_seed(fc.seed, c));
    std::vector<ChainResult> chains;
    if (fc.chains == 1) {
        chains.push_back(run_chain(tokens, config, priors, fc, seeds[0]));
    } else {
        std::vector<std::future<ChainResult>> jobs;
        for (Seed s : seeds) {
            jobs.push_back(std::async(std::launch::async, [&, s] { return run_chain(tokens, config, priors, fc, s); }));
        }
        for (auto& j : jobs) chains.push_back(j.get());
    }

    FitReport report;
    report.config = config;
    report.fit_config = fc;
    report.chain_seeds = seeds;
    report.kept_samples = chains[0].kept;
    report.mean_shrinks = chains[0].mean_shrinks;
    report.acceptance = chains[0].acceptance;
    report.topic_dist_samples = chains[0].samples;

    const double kept = static_cast<double>(chains[0].kept);
    const Eigen::MatrixXd reference = chains[0].topic_sum / kept;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(reference.rows(), reference.cols());
    Eigen::MatrixXd sumsq = sum;
    Eigen::MatrixXd words = Eigen::MatrixXd::Zero(chains[0].word_sum.rows(), chains[0].word_sum.cols());
    for (const auto& ch : chains) {
        const TopicMatch m = match_topics(ch.topic_sum / kept, reference);
        for (std::size_t k = 0; k < m.permutation.size(); ++k) {
            const auto dst = static_cast<Eigen::Index>(k), src = static_cast<Eigen::Index>(m.permutation[k]);
            sum.col(dst) += ch.topic_sum.col(src);
            sumsq.col(dst) += ch.topic_sumsq.col(src);
            words.row(dst) += ch.word_sum.row(src);
        }
        report.loglik_traces.push_back(ch.trace);
    }
    const double total = kept * static_cast<double>(chains.size());
    report.topic_dist = sum / total;
    const Eigen::ArrayXXd var = (sumsq / total).array() - report.topic_dist.array().square();
    report.topic_dist_sd = var.max(0.0).sqrt().matrix();
    report.word_dist = words / total;
    report.top_words = rank_top_words(report.word_dist, fc.top_words);
    return report;
}

GridSearchResult fit_hyperparams_grid(const Corpus& corpus, const ModelConfig& base,
                                      const std::vector<GridPoint>& grid, std::size_t num_mc,
                                      Seed seed, GridObjective objective) {
    if (grid.empty()) throw DomainError("hyperparameter grid is empty");
    Rng rng(seed);
    const StandardNormals normals = draw_standard_normals(base.num_topics, base.vocab_size, num_mc, rng);

    GridSearchResult out;
    for (const GridPoint& p : grid) {
        ModelConfig c = base;
        c.alpha.sigma = p.sigma_alpha;
        c.alpha.nu = p.nu_alpha;
        c.alpha.validate(c.num_topics, "alpha");
        GridScore score{p, 0.0, objective == GridObjective::per_word
                                    ? corpus_log_likelihood(corpus, c, normals)
                                    : joint_corpus_log_likelihood(corpus, c, normals)};
        score.total = std::accumulate(score.per_time.begin(), score.per_time.end(), 0.0);
        out.table.push_back(std::move(score));
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (grid[a].sigma_alpha != grid[b].sigma_alpha) return grid[a].sigma_alpha < grid[b].sigma_alpha;
        return grid[a].nu_alpha < grid[b].nu_alpha;
    });
    out.best = order.front();
    for (std::size_t i : order) {
        if (out.table[i].total > out.table[out.best].total) out.best = i;
    }
    out.best_config = base;
    out.best_config.alpha.sigma = grid[out.best].sigma_alpha;
    out.best_config.alpha.nu = grid[out.best].nu_alpha;
    return out;
}

}  // namespace cftm
