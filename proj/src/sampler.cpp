#include "cftm/sampler.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cftm/error.hpp"

namespace cftm {
namespace {

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Eigen::VectorXd row = m.row(r).transpose();
        out.row(r) = (row.array() - log_sum_exp(row)).matrix().transpose();
    }
    return out;
}

std::string dump(const Eigen::MatrixXd& x) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x.data()[i];
    os << "]";
    return os.str();
}

}  // namespace

TokenList TokenList::from(const Corpus& corpus) {
    TokenList out;
    out.num_times = corpus.num_times();
    out.vocab_size = corpus.vocab_size;
    for (std::size_t t = 0; t < corpus.num_times(); ++t) {
        for (WordId w : corpus.bags[t]) {
            out.time.push_back(t);
            out.word.push_back(w);
        }
    }
    return out;
}

std::shared_ptr<const PathCovariance> PathCovariance::build(const TimeGrid& grid, HurstIndex h,
                                                            double nu, double sigma) {
    auto out = std::make_shared<PathCovariance>();
    const auto n = static_cast<Eigen::Index>(grid.size());
    out->cov.resize(n, n);
    const double s2 = sigma * sigma;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            out->cov(i, j) = out->cov(j, i) =
                nu + s2 * fbm_cov(grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)], h);
        }
    }
    out->chol = cholesky_with_jitter(out->cov);
    return out;
}

GaussianPathPrior::GaussianPathPrior(Eigen::MatrixXd mean, std::shared_ptr<const PathCovariance> cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (mean_.rows() != cov_->cov.rows()) throw DomainError("prior mean and covariance sizes differ");
}

Eigen::MatrixXd GaussianPathPrior::sample_centered(Rng& rng) const {
    Eigen::MatrixXd z(mean_.rows(), mean_.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
    }
    return cov_->chol.lower.triangularView<Eigen::Lower>() * z;
}

double GaussianPathPrior::log_density(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd white =
        cov_->chol.lower.triangularView<Eigen::Lower>().solve(x - mean_);
    return -0.5 * white.squaredNorm();
}

ModelPriors build_priors(const ModelConfig& config, const TimeGrid& grid) {
    const auto K = config.num_topics, W = config.vocab_size;
    const auto P = static_cast<Eigen::Index>(grid.size());
    ModelPriors priors;
    const auto alpha_cov = PathCovariance::build(grid, config.h, config.alpha.nu, config.alpha.sigma);
    for (std::size_t k = 0; k < K; ++k) {
        priors.alpha.emplace_back(Eigen::MatrixXd::Constant(P, 1, config.alpha.mu[k]), alpha_cov);
    }
    const auto beta_cov = config.beta_evolves
                              ? PathCovariance::build(grid, config.h, config.beta.nu, config.beta.sigma)
                              : PathCovariance::build(TimeGrid({0.0}), config.h, config.beta.nu, 0.0);
    const Eigen::Index rows = config.beta_evolves ? P : 1;
    for (std::size_t k = 0; k < K; ++k) {
        Eigen::MatrixXd mean(rows, static_cast<Eigen::Index>(W));
        for (std::size_t w = 0; w < W; ++w) mean.col(static_cast<Eigen::Index>(w)).setConstant(config.beta.mu[k * W + w]);
        priors.beta.emplace_back(std::move(mean), beta_cov);
    }
    return priors;
}

void ModelState::recount(const TokenList& tokens) {
    const auto K = alpha.cols();
    time_topic = Eigen::MatrixXi::Zero(alpha.rows(), K);
    topic_word.assign(beta.size(), Eigen::MatrixXi::Zero(K, beta[0].cols()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto t = static_cast<Eigen::Index>(tokens.time[i]);
        const auto k = static_cast<Eigen::Index>(z[i]);
        ++time_topic(t, k);
        ++topic_word[beta.size() == 1 ? 0 : tokens.time[i]](k, static_cast<Eigen::Index>(tokens.word[i]));
    }
}

bool ModelState::counts_consistent(const TokenList& tokens) const {
    ModelState fresh;
    fresh.alpha = alpha;
    fresh.beta = beta;
    fresh.z = z;
    fresh.recount(tokens);
    if (fresh.time_topic != time_topic || fresh.topic_word.size() != topic_word.size()) return false;
    for (std::size_t b = 0; b < topic_word.size(); ++b) {
        if (fresh.topic_word[b] != topic_word[b]) return false;
    }
    return true;
}

Eigen::VectorXd topic_conditional(const Eigen::VectorXd& alpha_t, const Eigen::MatrixXd& beta_t,
                                  WordId w) {
    const Eigen::VectorXd topic = softmax(alpha_t);
    Eigen::VectorXd p(topic.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        p(k) = topic(k) * softmax(Eigen::VectorXd(beta_t.row(k).transpose()))(static_cast<Eigen::Index>(w));
    }
    return p / p.sum();
}

void gibbs_sweep_z(ModelState& state, const TokenList& tokens, Rng& rng) {
    const auto K = static_cast<Eigen::Index>(state.num_topics());
    const Eigen::MatrixXd log_topic = log_softmax_rows(state.alpha);
    std::vector<Eigen::MatrixXd> log_word;
    for (const auto& b : state.beta) log_word.push_back(log_softmax_rows(b));

    std::vector<double> p(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t t = tokens.time[i];
        const auto w = static_cast<Eigen::Index>(tokens.word[i]);
        const std::size_t blk = state.beta.size() == 1 ? 0 : t;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < K; ++k) {
            p[static_cast<std::size_t>(k)] = log_topic(static_cast<Eigen::Index>(t), k) + log_word[blk](k, w);
            mx = std::max(mx, p[static_cast<std::size_t>(k)]);
        }
        for (double& v : p) v = std::exp(v - mx);
        const std::size_t z_new = sample_categorical(p, rng);
        const std::size_t z_old = state.z[i];
        if (z_new != z_old) {
            --state.time_topic(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(z_old));
            ++state.time_topic(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(z_new));
            --state.topic_word[blk](static_cast<Eigen::Index>(z_old), w);
            ++state.topic_word[blk](static_cast<Eigen::Index>(z_new), w);
            state.z[i] = z_new;
        }
    }
}

double alpha_log_likelihood(const Eigen::MatrixXd& alpha, const Eigen::MatrixXi& time_topic) {
    double ll = 0.0;
    for (Eigen::Index t = 0; t < alpha.rows(); ++t) {
        const int n = time_topic.row(t).sum();
        if (n == 0) continue;
        const Eigen::VectorXd row = alpha.row(t).transpose();
        ll += time_topic.row(t).cast<double>().dot(alpha.row(t)) - n * log_sum_exp(row);
    }
    return ll;
}

double beta_block_log_likelihood(const Eigen::MatrixXd& block, const std::vector<Eigen::MatrixXi>& topic_word,
                                 std::size_t topic) {
    const auto k = static_cast<Eigen::Index>(topic);
    double ll = 0.0;
    for (Eigen::Index p = 0; p < block.rows(); ++p) {
        const auto& counts = topic_word[static_cast<std::size_t>(p)];
        const int m = counts.row(k).sum();
        if (m == 0) continue;
        const Eigen::VectorXd row = block.row(p).transpose();
        ll += counts.row(k).cast<double>().dot(block.row(p)) - m * log_sum_exp(row);
    }
    return ll;
}

double data_log_likelihood(const ModelState& state, const TokenList& tokens) {
    const auto T1 = static_cast<std::size_t>(state.alpha.rows());
    std::vector<std::vector<int>> counts(T1, std::vector<int>(tokens.vocab_size, 0));
    for (std::size_t i = 0; i < tokens.size(); ++i) ++counts[tokens.time[i]][tokens.word[i]];
    double ll = 0.0;
    for (std::size_t t = 0; t < T1; ++t) {
        const Eigen::VectorXd lp = log_word_probs(state.alpha.row(static_cast<Eigen::Index>(t)).transpose(), state.beta_at(t));
        for (std::size_t w = 0; w < tokens.vocab_size; ++w) {
            if (counts[t][w]) ll += counts[t][w] * lp(static_cast<Eigen::Index>(w));
        }
    }
    return ll;
}

std::size_t elliptical_slice(Eigen::MatrixXd& x, const GaussianPathPrior& prior,
                             const std::function<double(const Eigen::MatrixXd&)>& log_lik,
                             Rng& rng, std::size_t max_shrink) {
    const double current = log_lik(x);
    const double threshold = current + std::log(rng.uniform());
    const Eigen::MatrixXd nu = prior.sample_centered(rng);
    const Eigen::MatrixXd f = x - prior.mean();

    constexpr double two_pi = 2.0 * std::numbers::pi;
    double theta = two_pi * rng.uniform();
    double lo = theta - two_pi, hi = theta;
    for (std::size_t shrinks = 0;; ++shrinks) {
        Eigen::MatrixXd proposal = prior.mean() + f * std::cos(theta) + nu * std::sin(theta);
        if (log_lik(proposal) > threshold) {
            x = std::move(proposal);
            return shrinks;
        }
        if (shrinks >= max_shrink) {
            throw NumericalError("elliptical slice exceeded " + std::to_string(max_shrink) +
                                 " shrink steps; log_lik=" + std::to_string(current) +
                                 " threshold=" + std::to_string(threshold) + " state=" + dump(x));
        }
        if (theta < 0.0) lo = theta; else hi = theta;
        theta = lo + (hi - lo) * rng.uniform();
    }
}

Eigen::MatrixXd beta_block(const ModelState& state, std::size_t topic) {
    const auto k = static_cast<Eigen::Index>(topic);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(state.beta.size()), state.beta[0].cols());
    for (std::size_t p = 0; p < state.beta.size(); ++p) out.row(static_cast<Eigen::Index>(p)) = state.beta[p].row(k);
    return out;
}

void set_beta_block(ModelState& state, std::size_t topic, const Eigen::MatrixXd& block) {
    const auto k = static_cast<Eigen::Index>(topic);
    for (std::size_t p = 0; p < state.beta.size(); ++p) state.beta[p].row(k) = block.row(static_cast<Eigen::Index>(p));
}

std::size_t ess_update_alpha(ModelState& state, const ModelPriors& priors, Rng& rng,
                             std::size_t max_shrink) {
    std::size_t shrinks = 0;
    Eigen::MatrixXd scratch = state.alpha;
    for (std::size_t k = 0; k < state.num_topics(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        Eigen::MatrixXd x = state.alpha.col(col);
        auto log_lik = [&](const Eigen::MatrixXd& path) {
            scratch.col(col) = path.col(0);
            return alpha_log_likelihood(scratch, state.time_topic);
        };
        shrinks += elliptical_slice(x, priors.alpha[k], log_lik, rng, max_shrink);
        state.alpha.col(col) = x.col(0);
        scratch.col(col) = x.col(0);
    }
    return shrinks;
}

std::size_t ess_update_beta(ModelState& state, const ModelPriors& priors, Rng& rng,
                            std::size_t max_shrink) {
    std::size_t shrinks = 0;
    for (std::size_t k = 0; k < state.num_topics(); ++k) {
        Eigen::MatrixXd x = beta_block(state, k);
        auto log_lik = [&](const Eigen::MatrixXd& block) {
            return beta_block_log_likelihood(block, state.topic_word, k);
        };
        shrinks += elliptical_slice(x, priors.beta[k], log_lik, rng, max_shrink);
        set_beta_block(state, k, x);
    }
    return shrinks;
}

std::size_t rwm_update_alpha(ModelState& state, const ModelPriors& priors,
                             const std::vector<double>& scales, Rng& rng,
                             std::vector<bool>* accepted) {
    std::size_t accepts = 0;
    if (accepted) accepted->assign(state.num_topics(), false);
    for (std::size_t k = 0; k < state.num_topics(); ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        const Eigen::MatrixXd x = state.alpha.col(col);
        const Eigen::MatrixXd prop = x + scales[k] * priors.alpha[k].sample_centered(rng);
        Eigen::MatrixXd trial = state.alpha;
        trial.col(col) = prop.col(0);
        const double log_ratio = alpha_log_likelihood(trial, state.time_topic) + priors.alpha[k].log_density(prop) -
                                 alpha_log_likelihood(state.alpha, state.time_topic) - priors.alpha[k].log_density(x);
        if (std::log(rng.uniform()) < log_ratio) {
            state.alpha = std::move(trial);
            ++accepts;
            if (accepted) (*accepted)[k] = true;
        }
    }
    return accepts;
}

std::size_t rwm_update_beta(ModelState& state, const ModelPriors& priors,
                            const std::vector<double>& scales, Rng& rng,
                            std::vector<bool>* accepted) {
    std::size_t accepts = 0;
    if (accepted) accepted->assign(state.num_topics(), false);
    for (std::size_t k = 0; k < state.num_topics(); ++k) {
        const Eigen::MatrixXd x = beta_block(state, k);
        const Eigen::MatrixXd prop = x + scales[k] * priors.beta[k].sample_centered(rng);
        const double log_ratio = beta_block_log_likelihood(prop, state.topic_word, k) + priors.beta[k].log_density(prop) -
                                 beta_block_log_likelihood(x, state.topic_word, k) - priors.beta[k].log_density(x);
        if (std::log(rng.uniform()) < log_ratio) {
            set_beta_block(state, k, prop);
            ++accepts;
            if (accepted) (*accepted)[k] = true;
        }
    }
    return accepts;
}

}  // namespace cftm
