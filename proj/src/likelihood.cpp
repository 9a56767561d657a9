#include "cftm/likelihood.hpp"

#include <cmath>

#include "cftm/error.hpp"

namespace cftm {
namespace {

double column_log_mean_exp(const Eigen::MatrixXd& m, Eigen::Index col) {
    const double mx = m.col(col).maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((m.col(col).array() - mx).exp().mean());
}

// log of the Monte Carlo mean of exp(per_draw) per column, with delta-method
// standard errors; `weights` additionally yields the error of sum_w c_w log p_w.
struct MeanSummary {
    Eigen::VectorXd log_mean;
    Eigen::VectorXd std_error;
    double weighted_std_error = 0.0;
};

MeanSummary summarize(const Eigen::MatrixXd& per_draw, const std::vector<std::size_t>* weights) {
    const Eigen::Index n = per_draw.rows(), W = per_draw.cols();
    MeanSummary out;
    out.log_mean.resize(W);
    out.std_error.resize(W);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Eigen::Index w = 0; w < W; ++w) {
        out.log_mean(w) = column_log_mean_exp(per_draw, w);
        const Eigen::ArrayXd ratio = (per_draw.col(w).array() - out.log_mean(w)).exp();
        const double var = n > 1 ? (ratio - ratio.mean()).square().sum() / static_cast<double>(n - 1) : 0.0;
        out.std_error(w) = std::sqrt(var / static_cast<double>(n));
        if (weights) g += static_cast<double>((*weights)[static_cast<std::size_t>(w)]) * ratio.matrix();
    }
    if (weights && n > 1) {
        const double var = (g.array() - g.mean()).square().sum() / static_cast<double>(n - 1);
        out.weighted_std_error = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

void require_zero_drift(const ModelConfig& config) {
    if (!config.zero_drift()) {
        throw PreconditionError("closed-form marginals require zero drift");
    }
}

}  // namespace

StandardNormals draw_standard_normals(std::size_t num_topics, std::size_t vocab_size,
                                      std::size_t num_mc, Rng& rng) {
    if (num_mc < 1) throw DomainError("num_mc must be >= 1");
    const auto n = static_cast<Eigen::Index>(num_mc);
    const auto K = static_cast<Eigen::Index>(num_topics);
    const auto KW = static_cast<Eigen::Index>(num_topics * vocab_size);
    StandardNormals z{Eigen::MatrixXd(n, K), Eigen::MatrixXd(n, KW)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < K; ++k) z.alpha(i, k) = rng.normal();
        for (Eigen::Index j = 0; j < KW; ++j) z.beta(i, j) = rng.normal();
    }
    return z;
}

MarginalScale marginal_scale(const ModelConfig& config, double s) {
    const double growth = std::pow(s, config.h.twice());
    MarginalScale out;
    out.alpha = std::sqrt(config.alpha.nu + config.alpha.sigma * config.alpha.sigma * growth);
    out.beta = config.beta_evolves
                   ? std::sqrt(config.beta.nu + config.beta.sigma * config.beta.sigma * growth)
                   : std::sqrt(config.beta.nu);
    return out;
}

Eigen::VectorXd log_word_probs(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& beta) {
    const Eigen::Index K = beta.rows(), W = beta.cols();
    const Eigen::VectorXd log_topic = alpha.array() - log_sum_exp(alpha);
    Eigen::MatrixXd joint(K, W);
    for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::VectorXd row = beta.row(k).transpose();
        joint.row(k) = (row.array() - log_sum_exp(row) + log_topic(k)).matrix().transpose();
    }
    Eigen::VectorXd out(W);
    for (Eigen::Index w = 0; w < W; ++w) out(w) = log_sum_exp(Eigen::VectorXd(joint.col(w)));
    return out;
}

Eigen::MatrixXd per_draw_log_word_probs(const ModelConfig& config, double s,
                                        const StandardNormals& normals) {
    require_zero_drift(config);
    const auto K = static_cast<Eigen::Index>(config.num_topics);
    const auto W = static_cast<Eigen::Index>(config.vocab_size);
    if (normals.alpha.cols() != K || normals.beta.cols() != K * W) {
        throw DomainError("normal draws do not match the model dimensions");
    }
    const MarginalScale scale = marginal_scale(config, s);
    const Eigen::Map<const Eigen::VectorXd> mu_a(config.alpha.mu.data(), K);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        mu_b(config.beta.mu.data(), K, W);

    const Eigen::Index n = normals.alpha.rows();
    Eigen::MatrixXd out(n, W);
    Eigen::MatrixXd beta(K, W);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd alpha = mu_a + scale.alpha * normals.alpha.row(i).transpose();
        for (Eigen::Index k = 0; k < K; ++k) {
            for (Eigen::Index w = 0; w < W; ++w) beta(k, w) = mu_b(k, w) + scale.beta * normals.beta(i, k * W + w);
        }
        out.row(i) = log_word_probs(alpha, beta).transpose();
    }
    return out;
}

WordLogProbs word_log_probs(const ModelConfig& config, double s, const StandardNormals& normals) {
    const MeanSummary m = summarize(per_draw_log_word_probs(config, s, normals), nullptr);
    return {m.log_mean, m.std_error};
}

double word_log_prob(WordId w, double s, const ModelConfig& config, std::size_t num_mc, Rng& rng) {
    if (w >= config.vocab_size) throw DomainError("word id out of range");
    const StandardNormals z = draw_standard_normals(config.num_topics, config.vocab_size, num_mc, rng);
    return word_log_probs(config, s, z).log_prob(static_cast<Eigen::Index>(w));
}

std::vector<double> corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                          const StandardNormals& normals) {
    if (corpus.num_times() == 0) throw DomainError("corpus has no timestamps");
    if (corpus.vocab_size != config.vocab_size) {
        throw DomainError("corpus vocabulary size " + std::to_string(corpus.vocab_size) +
                          " does not match model vocab_size " + std::to_string(config.vocab_size));
    }
    const auto counts = corpus.word_counts();
    std::vector<double> out(corpus.num_times(), 0.0);
    for (std::size_t t = 0; t < corpus.num_times(); ++t) {
        if (corpus.bags[t].empty()) continue;
        const Eigen::VectorXd lp = word_log_probs(config, corpus.grid[t], normals).log_prob;
        double total = 0.0;
        for (std::size_t w = 0; w < config.vocab_size; ++w) {
            if (counts[t][w]) total += static_cast<double>(counts[t][w]) * lp(static_cast<Eigen::Index>(w));
        }
        out[t] = total;
    }
    return out;
}

std::vector<double> corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                          std::size_t num_mc, Rng& rng) {
    const StandardNormals z = draw_standard_normals(config.num_topics, config.vocab_size, num_mc, rng);
    return corpus_log_likelihood(corpus, config, z);
}

std::vector<double> joint_corpus_log_likelihood(const Corpus& corpus, const ModelConfig& config,
                                                const StandardNormals& normals) {
    if (corpus.vocab_size != config.vocab_size) {
        throw DomainError("corpus vocabulary size does not match model vocab_size");
    }
    const auto counts = corpus.word_counts();
    std::vector<double> out(corpus.num_times(), 0.0);
    for (std::size_t t = 0; t < corpus.num_times(); ++t) {
        if (corpus.bags[t].empty()) continue;
        const Eigen::MatrixXd per_draw = per_draw_log_word_probs(config, corpus.grid[t], normals);
        Eigen::VectorXd c(per_draw.cols());
        for (Eigen::Index w = 0; w < c.size(); ++w) c(w) = static_cast<double>(counts[t][static_cast<std::size_t>(w)]);
        const Eigen::VectorXd bag = per_draw * c;
        const double mx = bag.maxCoeff();
        out[t] = mx + std::log((bag.array() - mx).exp().mean());
    }
    return out;
}

LdaEquivalenceReport lda_equivalence_check(const ModelConfig& config, double s,
                                           const std::vector<std::size_t>& word_counts,
                                           std::size_t num_mc, Seed seed) {
    require_zero_drift(config);
    if (num_mc < 1) throw DomainError("num_mc must be >= 1");
    if (s < 0.0) throw DomainError("evaluation time must be nonnegative");
    if (word_counts.size() != config.vocab_size) throw DomainError("word_counts must have vocab_size entries");
    const std::size_t K = config.num_topics, W = config.vocab_size;
    const auto n = static_cast<Eigen::Index>(num_mc);

    // (a) SDE path machinery on the two-point grid {0, s}.
    ModelConfig at_s = config;
    at_s.grid = s > 0.0 ? TimeGrid({0.0, s}) : TimeGrid({0.0});
    at_s.tokens_per_time.assign(at_s.grid.size(), 1);
    at_s.regime_switch.reset();
    const FbmGenerator gen(at_s.grid, config.h);
    const std::size_t last = at_s.grid.size() - 1;

    Rng init_a(derive_seed(seed, 1));
    Rng fbm_rng(derive_seed(seed, 2));
    Eigen::MatrixXd per_draw_a(n, static_cast<Eigen::Index>(W));
    for (Eigen::Index i = 0; i < n; ++i) {
        PathNoise noise;
        for (std::size_t k = 0; k < K; ++k) noise.alpha.push_back(gen.sample(fbm_rng));
        if (config.beta_evolves) {
            for (std::size_t j = 0; j < K * W; ++j) noise.beta.push_back(gen.sample(fbm_rng));
        }
        const ParamPath path = solve_paths(at_s, noise, init_a);
        const Eigen::VectorXd alpha = path.alpha.row(static_cast<Eigen::Index>(last)).transpose();
        per_draw_a.row(i) = log_word_probs(alpha, path.beta_at(last)).transpose();
    }

    // (b) static Gaussian topic model with the closed-form marginal variance.
    // Same stream as (a)'s initial values, consumed in the same order.
    Rng init_b(derive_seed(seed, 1));
    StandardNormals z{Eigen::MatrixXd(n, static_cast<Eigen::Index>(K)),
                      Eigen::MatrixXd(n, static_cast<Eigen::Index>(K * W))};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) z.alpha(i, static_cast<Eigen::Index>(k)) = init_b.normal();
        for (std::size_t j = 0; j < K * W; ++j) z.beta(i, static_cast<Eigen::Index>(j)) = init_b.normal();
    }
    const Eigen::MatrixXd per_draw_b = per_draw_log_word_probs(config, s, z);

    const MeanSummary a = summarize(per_draw_a, &word_counts);
    const MeanSummary b = summarize(per_draw_b, &word_counts);
    LdaEquivalenceReport r;
    r.time = s;
    r.num_mc = num_mc;
    r.path_word_log_prob = a.log_mean;
    r.static_word_log_prob = b.log_mean;
    for (std::size_t w = 0; w < W; ++w) {
        const double c = static_cast<double>(word_counts[w]);
        if (c == 0.0) continue;
        r.path_log_lik += c * a.log_mean(static_cast<Eigen::Index>(w));
        r.static_log_lik += c * b.log_mean(static_cast<Eigen::Index>(w));
    }
    r.gap = std::abs(r.path_log_lik - r.static_log_lik);
    r.path_std_error = a.weighted_std_error;
    r.static_std_error = b.weighted_std_error;
    r.combined_std_error = std::hypot(r.path_std_error, r.static_std_error);
    r.agrees = r.gap < 1e-12 || r.gap <= 2.0 * r.combined_std_error;
    return r;
}

LdaEquivalenceReport lda_equivalence_check(const Corpus& corpus, std::size_t time_index,
                                           const ModelConfig& config, std::size_t num_mc,
                                           Seed seed) {
    if (time_index >= corpus.num_times()) throw DomainError("time index out of range");
    return lda_equivalence_check(config, corpus.grid[time_index], corpus.word_counts()[time_index],
                                 num_mc, seed);
}

}  // namespace cftm
