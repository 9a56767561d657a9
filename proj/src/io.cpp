#include "cftm/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "cftm/error.hpp"

namespace cftm {
namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json sde_to_json(const SdeParams& p) {
    return {{"mu", p.mu},
            {"nu", p.nu},
            {"sigma", p.sigma},
            {"drift", {{"intercept", p.drift.intercept}, {"slope", p.drift.slope}}}};
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ParseError("field '" + field + "': " + what);
}

void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& allowed,
                const std::set<std::string>& required) {
    if (!j.is_object()) field_error(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) field_error(prefix + key, "unknown field");
    }
    for (const auto& key : required) {
        if (!j.contains(key)) field_error(prefix + key, "missing required field");
    }
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) field_error(field, "expected a number");
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 0) field_error(field, "expected a non-negative integer");
    return j.get<std::size_t>();
}

bool boolean(const json& j, const std::string& field) {
    if (!j.is_boolean()) field_error(field, "expected true or false");
    return j.get<bool>();
}

std::vector<double> number_list(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

template <class F>
auto with_field(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw Error(e.code(), "field '" + field + "': " + e.what());
    }
}

SdeParams sde_from_json(const json& j, const std::string& name, std::size_t mu_size) {
    const std::string p = name + ".";
    check_keys(j, p, {"mu", "nu", "sigma", "drift"}, {});
    SdeParams s;
    s.mu.assign(mu_size, 0.0);
    if (j.contains("mu")) {
        const json& mu = j["mu"];
        if (mu.is_number()) s.mu.assign(mu_size, mu.get<double>());
        else s.mu = number_list(mu, p + "mu");
    }
    if (j.contains("nu")) s.nu = number(j["nu"], p + "nu");
    if (j.contains("sigma")) s.sigma = number(j["sigma"], p + "sigma");
    if (j.contains("drift")) {
        const json& d = j["drift"];
        check_keys(d, p + "drift.", {"intercept", "slope"}, {});
        if (d.contains("intercept")) s.drift.intercept = number(d["intercept"], p + "drift.intercept");
        if (d.contains("slope")) s.drift.slope = number(d["slope"], p + "drift.slope");
    }
    with_field(name, [&] { s.validate(mu_size, name.c_str()); return 0; });
    return s;
}

void read_common(const json& j, ModelConfig& c) {
    c.num_topics = count(j["num_topics"], "num_topics");
    if (c.num_topics < 1) field_error("num_topics", "must be >= 1");
    c.vocab_size = count(j["vocab_size"], "vocab_size");
    c.h = with_field("h", [&] { return HurstIndex(number(j["h"], "h")); });
    c.alpha = j.contains("alpha") ? sde_from_json(j["alpha"], "alpha", c.num_topics)
                                  : sde_from_json(json::object(), "alpha", c.num_topics);
    c.beta = j.contains("beta") ? sde_from_json(j["beta"], "beta", c.num_topics * c.vocab_size)
                                : sde_from_json(json::object(), "beta", c.num_topics * c.vocab_size);
    if (j.contains("beta_evolves")) c.beta_evolves = boolean(j["beta_evolves"], "beta_evolves");
}

void check_schema(const json& j, const char* expected) {
    if (!j.is_object() || !j.contains("schema")) field_error("schema", "missing required field");
    if (!j["schema"].is_string() || j["schema"].get<std::string>() != expected) {
        field_error("schema", std::string("expected \"") + expected + "\"");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(fields[i]);
    }
    out << "\r\n";
}

void write_paths_csv(std::ostream& out, const TimeGrid& grid, const std::vector<FbmPath>& paths) {
    std::vector<std::string> header{"time"};
    for (std::size_t p = 0; p < paths.size(); ++p) header.push_back("path_" + std::to_string(p + 1));
    write_csv_row(out, header);
    for (std::size_t t = 0; t < grid.size(); ++t) {
        std::vector<std::string> row{format_double(grid[t])};
        for (const auto& path : paths) row.push_back(format_double(path.values[t]));
        write_csv_row(out, row);
    }
}

void write_covariance_csv(std::ostream& out, const FbmCovariance& cov) {
    std::vector<std::string> header{"time"};
    for (double t : cov.grid.points()) header.push_back(format_double(t));
    write_csv_row(out, header);
    for (std::size_t i = 0; i < cov.grid.size(); ++i) {
        std::vector<std::string> row{format_double(cov.grid[i])};
        for (std::size_t j = 0; j < cov.grid.size(); ++j) {
            row.push_back(format_double(cov.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
        write_csv_row(out, row);
    }
}

void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocab) {
    write_csv_row(out, {"id", "token", "doc_frequency"});
    for (WordId w = 0; w < vocab.size(); ++w) {
        write_csv_row(out, {std::to_string(w + 1), vocab.word(w), std::to_string(vocab.doc_frequency(w))});
    }
}

void write_topic_dist_csv(std::ostream& out, const TimeGrid& grid, const Eigen::MatrixXd& topic_dist) {
    std::vector<std::string> header{"time_index", "time"};
    for (Eigen::Index k = 0; k < topic_dist.cols(); ++k) header.push_back("topic_" + std::to_string(k + 1));
    write_csv_row(out, header);
    for (Eigen::Index t = 0; t < topic_dist.rows(); ++t) {
        std::vector<std::string> row{std::to_string(t), format_double(grid[static_cast<std::size_t>(t)])};
        for (Eigen::Index k = 0; k < topic_dist.cols(); ++k) row.push_back(format_double(topic_dist(t, k)));
        write_csv_row(out, row);
    }
}

void write_top_words_csv(std::ostream& out, const FitReport& report, const Vocabulary& vocab) {
    write_csv_row(out, {"topic", "rank", "word_id", "token", "probability"});
    for (std::size_t k = 0; k < report.top_words.size(); ++k) {
        for (std::size_t r = 0; r < report.top_words[k].size(); ++r) {
            const TopWord& w = report.top_words[k][r];
            const std::string token = w.word < vocab.size() ? vocab.word(w.word) : "";
            write_csv_row(out, {std::to_string(k + 1), std::to_string(r + 1), std::to_string(w.word + 1), token,
                                format_double(w.probability)});
        }
    }
}

void write_loglik_csv(std::ostream& out, const FitReport& report) {
    write_csv_row(out, {"chain", "iteration", "loglik"});
    for (std::size_t c = 0; c < report.loglik_traces.size(); ++c) {
        for (std::size_t i = 0; i < report.loglik_traces[c].size(); ++i) {
            write_csv_row(out, {std::to_string(c + 1), std::to_string(i + 1), format_double(report.loglik_traces[c][i])});
        }
    }
}

void write_lrd_csv(std::ostream& out, const LrdReport& report) {
    write_csv_row(out, {"m", "gamma", "partial_sum"});
    for (std::size_t m = 1; m <= report.horizon; ++m) {
        write_csv_row(out, {std::to_string(m), format_double(increment_autocov(m, report.h)),
                            format_double(report.partial_sums[m - 1])});
    }
}

void write_eval_csv(std::ostream& out, const Corpus& corpus, const std::vector<double>& per_time) {
    write_csv_row(out, {"time_index", "time", "num_tokens", "log_likelihood"});
    for (std::size_t t = 0; t < per_time.size(); ++t) {
        write_csv_row(out, {std::to_string(t), format_double(corpus.grid[t]), std::to_string(corpus.bags[t].size()),
                            format_double(per_time[t])});
    }
}

json to_json(const TimeGrid& grid) { return grid.points(); }

json to_json(const FbmCovariance& cov) {
    return {{"grid", to_json(cov.grid)}, {"h", cov.h.value()}, {"matrix", matrix_rows(cov.matrix)}};
}

json to_json(const std::vector<FbmPath>& paths) {
    json arr = json::array();
    for (const auto& p : paths) {
        arr.push_back({{"seed", p.seed},
                       {"values", p.values}});
    }
    return {{"grid", paths.empty() ? json::array() : to_json(paths.front().grid)}, {"paths", arr}};
}

json to_json(const ModelConfig& c) {
    json j = {{"schema", kModelConfigSchema},
              {"num_topics", c.num_topics},
              {"vocab_size", c.vocab_size},
              {"h", c.h.value()},
              {"grid", to_json(c.grid)},
              {"alpha", sde_to_json(c.alpha)},
              {"beta", sde_to_json(c.beta)},
              {"beta_evolves", c.beta_evolves},
              {"tokens_per_time", c.tokens_per_time}};
    if (c.regime_switch) {
        j["regime_switch"] = {{"time", c.regime_switch->time}, {"alpha_shift", c.regime_switch->alpha_shift}};
    }
    return j;
}

json to_json(const FitConfig& f) {
    return {{"iterations", f.iterations},
            {"burn_in", f.burn_in},
            {"thinning", f.thinning},
            {"seed", f.seed},
            {"ess_max_shrink_iters", f.ess_max_shrink_iters},
            {"sampler", to_string(f.sampler)},
            {"rwm_initial_scale", f.rwm_initial_scale},
            {"freeze_beta", f.freeze_beta},
            {"chains", f.chains},
            {"top_words", f.top_words}};
}

json to_json(const FitReport& r, const Vocabulary& vocab, const Corpus& corpus) {
    json top = json::array();
    for (std::size_t k = 0; k < r.top_words.size(); ++k) {
        json words = json::array();
        for (const TopWord& w : r.top_words[k]) {
            words.push_back({{"word_id", w.word + 1},
                             {"token", w.word < vocab.size() ? vocab.word(w.word) : ""},
                             {"probability", w.probability}});
        }
        top.push_back({{"topic", k + 1}, {"words", words}});
    }
    const TrajectorySummary traj = summarize_trajectory(r);
    const json trajectory = {{"max_step_change", traj.max_step_change},
                             {"max_step_time_index", traj.max_step_index},
                             {"max_step_time", r.config.grid[traj.max_step_index]},
                             {"shift_zscore", traj.shift_zscore}};
    return {{"schema", "cftm.fit_report/1"},
            {"seed", r.fit_config.seed},
            {"chain_seeds", r.chain_seeds},
            {"config", to_json(r.config)},
            {"fit_config", to_json(r.fit_config)},
            {"grid", to_json(corpus.grid)},
            {"doc_counts", corpus.doc_counts},
            {"tokens_per_time", r.config.tokens_per_time},
            {"kept_samples_per_chain", r.kept_samples},
            {"mean_shrink_steps", r.mean_shrinks},
            {"rwm_acceptance", r.acceptance},
            {"topic_dist_per_time", matrix_rows(r.topic_dist)},
            {"topic_dist_sd", matrix_rows(r.topic_dist_sd)},
            {"trajectory", trajectory},
            {"word_dist", matrix_rows(r.word_dist)},
            {"top_words", top},
            {"loglik_traces", r.loglik_traces}};
}

json to_json(const LrdReport& r) {
    return {{"h", r.h.value()},
            {"horizon", r.horizon},
            {"classification", to_string(r.classification)},
            {"tail_exponent", r.tail_exponent},
            {"growth_exponent", r.growth_exponent},
            {"last_decade_increase", r.last_decade_increase},
            {"final_partial_sum", r.partial_sums.back()}};
}

json to_json(const SelfSimilarityReport& r) {
    return {{"h", r.h.value()}, {"a", r.a},         {"t", r.t},     {"num_draws", r.num_draws},
            {"seed", r.seed},   {"var_t", r.var_t}, {"var_at", r.var_at}, {"ratio", r.ratio}};
}

json to_json(const RegularityTransferReport& r) {
    json coords = json::array();
    for (std::size_t k = 0; k < r.coordinates.size(); ++k) {
        const auto& c = r.coordinates[k];
        json e = {{"topic", k + 1}};
        if (c.estimate) {
            e["estimate"] = c.estimate->estimate;
            e["dfa"] = c.estimate->dfa;
        } else {
            e["error"] = c.error;
        }
        coords.push_back(std::move(e));
    }
    return {{"h", r.h.value()}, {"num_topics", r.num_topics}, {"length", r.length},
            {"seed", r.seed},   {"coordinates", coords}};
}

json to_json(const LdaEquivalenceReport& r) {
    return {{"time", r.time},
            {"num_mc", r.num_mc},
            {"path_log_lik", r.path_log_lik},
            {"static_log_lik", r.static_log_lik},
            {"gap", r.gap},
            {"combined_std_error", r.combined_std_error},
            {"agrees", r.agrees}};
}

json truth_to_json(const SyntheticCorpus& s, const ModelConfig& config) {
    json beta = json::array();
    for (const auto& b : s.truth.beta) beta.push_back(matrix_rows(b));
    json assignments = json::array();
    for (const auto& z : s.assignments) {
        json row = json::array();
        for (std::size_t k : z) row.push_back(k + 1);
        assignments.push_back(std::move(row));
    }
    return {{"schema", "cftm.truth/1"},
            {"seed", s.seed},
            {"config", to_json(config)},
            {"alpha", matrix_rows(s.truth.alpha)},
            {"topic_dist_per_time", matrix_rows(topic_proportions(s.truth.alpha))},
            {"beta", beta},
            {"assignments", assignments}};
}

ModelConfig model_config_from_json(const json& j) {
    check_schema(j, kModelConfigSchema);
    check_keys(j, "",
               {"schema", "num_topics", "vocab_size", "h", "grid", "alpha", "beta", "beta_evolves",
                "tokens_per_time", "regime_switch"},
               {"num_topics", "vocab_size", "h", "grid"});
    ModelConfig c;
    read_common(j, c);

    const json& g = j["grid"];
    if (g.is_array()) {
        c.grid = with_field("grid", [&] { return TimeGrid(number_list(g, "grid")); });
    } else {
        check_keys(g, "grid.", {"n", "step"}, {"n"});
        const std::size_t n = count(g["n"], "grid.n");
        const double step = g.contains("step") ? number(g["step"], "grid.step") : 1.0;
        c.grid = with_field("grid", [&] { return TimeGrid::uniform(n, step); });
    }

    c.tokens_per_time.assign(c.grid.size(), 200);
    if (j.contains("tokens_per_time")) {
        const json& n = j["tokens_per_time"];
        if (n.is_array()) {
            c.tokens_per_time.clear();
            for (std::size_t i = 0; i < n.size(); ++i) {
                c.tokens_per_time.push_back(count(n[i], "tokens_per_time[" + std::to_string(i) + "]"));
            }
        } else {
            c.tokens_per_time.assign(c.grid.size(), count(n, "tokens_per_time"));
        }
    }
    if (j.contains("regime_switch")) {
        const json& r = j["regime_switch"];
        check_keys(r, "regime_switch.", {"time", "alpha_shift"}, {"time", "alpha_shift"});
        c.regime_switch = RegimeSwitch{number(r["time"], "regime_switch.time"),
                                       number_list(r["alpha_shift"], "regime_switch.alpha_shift")};
        if (c.regime_switch->alpha_shift.size() != c.num_topics) {
            field_error("regime_switch.alpha_shift", "expected num_topics entries");
        }
    }
    c.validate();
    return c;
}

ModelConfig params_from_json(const json& j) {
    check_schema(j, kParamsSchema);
    check_keys(j, "", {"schema", "num_topics", "vocab_size", "h", "alpha", "beta", "beta_evolves"},
               {"num_topics", "vocab_size", "h"});
    ModelConfig c;
    read_common(j, c);
    return c;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_corpus_jsonl(std::ostream& out, const Corpus& corpus, const Vocabulary& vocab) {
    for (std::size_t t = 0; t < corpus.num_times(); ++t) {
        json rec = {{"doc_id", "t" + std::to_string(t)},
                    {"timestamp", corpus.grid[t]},
                    {"tokens", decode_bag(corpus.bags[t], vocab)}};
        out << rec.dump() << "\n";
    }
}

}  // namespace cftm
