#include "cftm/generative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cftm/error.hpp"

namespace cftm {

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw DomainError("log-sum-exp of an empty vector");
    const double m = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

double log_sum_exp(const Eigen::VectorXd& values) {
    return log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DomainError("softmax of an empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) s += out[i] = std::exp(logits[i] - m);
    for (double& v : out) v /= s;
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    if (logits.size() == 0) throw DomainError("softmax of an empty vector");
    Eigen::VectorXd out = (logits.array() - logits.maxCoeff()).exp();
    return out / out.sum();
}

double categorical_logpdf(std::span<const double> onehot, std::span<const double> phi) {
    if (onehot.size() != phi.size()) throw DomainError("one-hot and phi lengths differ");
    std::size_t active = onehot.size();
    for (std::size_t v = 0; v < onehot.size(); ++v) {
        if (onehot[v] == 1.0) {
            if (active != onehot.size()) throw DomainError("indicator has more than one active entry");
            active = v;
        } else if (onehot[v] != 0.0) {
            throw DomainError("indicator entries must be 0 or 1");
        }
    }
    if (active == onehot.size()) throw DomainError("indicator has no active entry");
    if (phi[active] <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(phi[active]);
}

std::size_t sample_categorical(std::span<const double> phi, Rng& rng) {
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t v = 0; v < phi.size(); ++v) {
        if (phi[v] <= 0.0) continue;
        acc += phi[v];
        last_positive = v;
        if (u < acc) return v;
    }
    return last_positive;  // rounding at the top end
}

void SdeParams::validate(std::size_t expected_mu, const char* name) const {
    const std::string n(name);
    if (mu.size() != expected_mu) {
        throw DomainError(n + ".mu must have " + std::to_string(expected_mu) + " entries, got " +
                          std::to_string(mu.size()));
    }
    for (double m : mu) {
        if (!std::isfinite(m)) throw DomainError(n + ".mu entries must be finite");
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError(n + ".nu must be > 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError(n + ".sigma must be >= 0");
    if (!std::isfinite(drift.intercept) || !std::isfinite(drift.slope)) {
        throw DomainError(n + ".drift coefficients must be finite");
    }
}

void ModelConfig::validate() const {
    if (num_topics < 1) throw DomainError("num_topics must be >= 1");
    if (vocab_size < 2) throw DomainError("vocab_size must be >= 2");
    alpha.validate(num_topics, "alpha");
    beta.validate(num_topics * vocab_size, "beta");
    if (tokens_per_time.size() != grid.size()) {
        throw DomainError("tokens_per_time must have one entry per grid point (" +
                          std::to_string(grid.size()) + ")");
    }
    for (std::size_t n : tokens_per_time) {
        if (n < 1) throw DomainError("tokens_per_time entries must be >= 1");
    }
    if (regime_switch) {
        if (regime_switch->alpha_shift.size() != num_topics) {
            throw DomainError("regime_switch.alpha_shift must have num_topics entries");
        }
    }
}

ModelConfig make_config(std::size_t num_topics, std::size_t vocab_size, HurstIndex h,
                        TimeGrid grid, double nu_alpha, double sigma_alpha, double nu_beta,
                        double sigma_beta, std::size_t tokens_per_time) {
    ModelConfig c;
    c.num_topics = num_topics;
    c.vocab_size = vocab_size;
    c.h = h;
    c.tokens_per_time.assign(grid.size(), tokens_per_time);
    c.grid = std::move(grid);
    c.alpha = {std::vector<double>(num_topics, 0.0), nu_alpha, sigma_alpha, {}};
    c.beta = {std::vector<double>(num_topics * vocab_size, 0.0), nu_beta, sigma_beta, {}};
    return c;
}

bool ParamPath::all_finite() const {
    if (!alpha.allFinite()) return false;
    return std::all_of(beta.begin(), beta.end(), [](const auto& b) { return b.allFinite(); });
}

FbmGenerator::FbmGenerator(const TimeGrid& grid, HurstIndex h) : points_(grid.size()) {
    if (points_ < 2) return;
    if (grid.is_equispaced()) {
        scale_ = std::pow(grid[1], h.value());
        spectral_.emplace(points_ - 1, h);
    } else {
        exact_.emplace(grid, h);
    }
}

Eigen::VectorXd FbmGenerator::sample(Rng& rng) const {
    const auto n = static_cast<Eigen::Index>(points_);
    if (exact_) return exact_->sample_values(rng);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (!spectral_) return out;
    const std::vector<double> inc = spectral_->sample(rng);
    for (Eigen::Index i = 1; i < n; ++i) out(i) = out(i - 1) + scale_ * inc[static_cast<std::size_t>(i - 1)];
    return out;
}

PathNoise draw_path_noise(const ModelConfig& config, Rng& rng) {
    const FbmGenerator gen(config.grid, config.h);
    PathNoise noise;
    for (std::size_t k = 0; k < config.num_topics; ++k) noise.alpha.push_back(gen.sample(rng));
    if (config.beta_evolves) {
        for (std::size_t i = 0; i < config.num_topics * config.vocab_size; ++i) {
            noise.beta.push_back(gen.sample(rng));
        }
    }
    return noise;
}

namespace {

// One coordinate of the SDE solution given its initial value and driving fBm path.
void solve_coordinate(double x0, const Eigen::VectorXd& fbm, double sigma, const Drift& drift,
                      const TimeGrid& grid, auto&& write) {
    if (drift.is_zero()) {
        for (std::size_t t = 0; t < grid.size(); ++t) write(t, x0 + sigma * fbm(static_cast<Eigen::Index>(t)));
        return;
    }
    double x = x0;
    write(0, x);
    for (std::size_t t = 1; t < grid.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(t);
        const double f = drift(x);
        if (!std::isfinite(f)) throw NumericalError("drift evaluated to a non-finite value");
        x += f * (grid[t] - grid[t - 1]) + sigma * (fbm(i) - fbm(i - 1));
        if (!std::isfinite(x)) throw NumericalError("Euler-Maruyama step produced a non-finite value");
        write(t, x);
    }
}

}  // namespace

ParamPath solve_paths(const ModelConfig& config, const PathNoise& noise, Rng& rng) {
    const std::size_t K = config.num_topics, W = config.vocab_size, T1 = config.num_times();
    if (noise.alpha.size() != K) throw PreconditionError("need one fBm path per topic for alpha");
    if (config.beta_evolves && noise.beta.size() != K * W) {
        throw PreconditionError("need one fBm path per (topic, word) pair for evolving beta");
    }
    const double sd_a = std::sqrt(config.alpha.nu), sd_b = std::sqrt(config.beta.nu);
    std::vector<double> alpha0(K), beta0(K * W);
    for (std::size_t k = 0; k < K; ++k) alpha0[k] = config.alpha.mu[k] + sd_a * rng.normal();
    for (std::size_t i = 0; i < K * W; ++i) beta0[i] = config.beta.mu[i] + sd_b * rng.normal();

    ParamPath out;
    out.alpha.resize(static_cast<Eigen::Index>(T1), static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        solve_coordinate(alpha0[k], noise.alpha[k], config.alpha.sigma, config.alpha.drift,
                         config.grid, [&](std::size_t t, double v) {
                             out.alpha(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = v;
                         });
    }
    if (!config.beta_evolves) {
        Eigen::MatrixXd b(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(W));
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t w = 0; w < W; ++w) b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = beta0[k * W + w];
        }
        out.beta.push_back(std::move(b));
    } else {
        out.beta.assign(T1, Eigen::MatrixXd(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(W)));
        for (std::size_t i = 0; i < K * W; ++i) {
            const auto k = static_cast<Eigen::Index>(i / W), w = static_cast<Eigen::Index>(i % W);
            solve_coordinate(beta0[i], noise.beta[i], config.beta.sigma, config.beta.drift,
                             config.grid, [&](std::size_t t, double v) { out.beta[t](k, w) = v; });
        }
    }
    if (config.regime_switch) {
        for (std::size_t t = 0; t < T1; ++t) {
            if (config.grid[t] < config.regime_switch->time) continue;
            for (std::size_t k = 0; k < K; ++k) {
                out.alpha(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) += config.regime_switch->alpha_shift[k];
            }
        }
    }
    if (!out.all_finite()) throw NumericalError("parameter path contains non-finite values");
    return out;
}

ParamPath sample_param_path(const ModelConfig& config, Rng& rng) {
    const Rng base(rng.engine()());
    Rng noise_rng = base.child(1);
    Rng init_rng = base.child(2);
    return solve_paths(config, draw_path_noise(config, noise_rng), init_rng);
}

std::string synthetic_word(WordId id, std::size_t vocab_size) {
    const std::size_t width = std::to_string(vocab_size).size();
    std::string digits = std::to_string(id + 1);
    return "w" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

SyntheticCorpus generate_corpus_from_paths(const ModelConfig& config, const ParamPath& truth,
                                           Rng& rng) {
    const std::size_t K = config.num_topics, W = config.vocab_size, T1 = config.num_times();
    SyntheticCorpus out;
    out.seed = rng.seed();
    out.truth = truth;
    out.corpus.grid = config.grid;
    out.corpus.vocab_size = W;
    out.corpus.bags.assign(T1, {});
    out.corpus.doc_counts.assign(T1, 1);
    out.assignments.assign(T1, {});

    std::vector<std::string> words;
    for (WordId w = 0; w < W; ++w) words.push_back(synthetic_word(w, W));

    const Rng base(rng.engine()());
    for (std::size_t t = 0; t < T1; ++t) {
        Rng step = base.child(100 + t);
        const Eigen::VectorXd topic_dist = softmax(Eigen::VectorXd(truth.alpha.row(static_cast<Eigen::Index>(t)).transpose()));
        std::vector<std::vector<double>> word_dist(K);
        for (std::size_t k = 0; k < K; ++k) {
            const Eigen::VectorXd p = softmax(Eigen::VectorXd(truth.beta_at(t).row(static_cast<Eigen::Index>(k)).transpose()));
            word_dist[k].assign(p.data(), p.data() + p.size());
        }
        const std::span<const double> topics(topic_dist.data(), K);
        for (std::size_t i = 0; i < config.tokens_per_time[t]; ++i) {
            const std::size_t z = sample_categorical(topics, step);
            const std::size_t w = sample_categorical(word_dist[z], step);
            out.assignments[t].push_back(z);
            out.corpus.bags[t].push_back(w);
        }
    }
    std::vector<std::size_t> df(W, 0);
    for (const auto& bag : out.corpus.bags) {
        std::vector<bool> seen(W, false);
        for (WordId w : bag) {
            if (!seen[w]) ++df[w], seen[w] = true;
        }
    }
    out.vocabulary = Vocabulary(std::move(words), std::move(df));
    return out;
}

SyntheticCorpus generate_corpus(const ModelConfig& config, Seed seed) {
    config.validate();
    Rng root(seed);
    Rng path_rng = root.child(1);
    const ParamPath truth = sample_param_path(config, path_rng);
    Rng token_rng = root.child(2);
    SyntheticCorpus out = generate_corpus_from_paths(config, truth, token_rng);
    out.seed = seed;
    return out;
}

}  // namespace cftm
