#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cftm/corpus.hpp"
#include "cftm/diagnostics.hpp"
#include "cftm/error.hpp"
#include "cftm/fit.hpp"
#include "cftm/io.hpp"
#include "cftm/likelihood.hpp"
#include "cftm/manifest.hpp"

namespace fs = std::filesystem;

namespace cftm::cli {
namespace {

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage: return 2;
        case ErrorCode::domain: return 3;
        case ErrorCode::numerical: return 4;
        case ErrorCode::precondition: return 5;
        case ErrorCode::parse: return 6;
        case ErrorCode::io: return 7;
        case ErrorCode::mismatch: return 8;
    }
    return 1;
}

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

const CLI::Validator open_unit_interval(
    [](std::string& s) -> std::string {
        try {
            const double v = std::stod(s);
            if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "H must lie in the open interval (0,1), got " + s;
    },
    "H in (0,1)");

const CLI::Validator at_least_one(
    [](std::string& s) -> std::string {
        try {
            if (std::stoll(s) >= 1) return {};
        } catch (const std::exception&) {
        }
        return "must be an integer >= 1, got " + s;
    },
    ">= 1");

// Collects output files, recording their hashes as they are written.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& text) {
        write_text_file(dir_ / name, text);
        records_.push_back({name, sha256_hex(text)});
    }
    const std::vector<FileRecord>& records() const { return records_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<FileRecord> records_;
};

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

struct SeedOption {
    Seed value = 0;
    bool given = false;

    Seed resolve() const {
        if (given) return value;
        if (const char* env = std::getenv("CFTM_SEED")) {
            try {
                std::size_t used = 0;
                const Seed s = std::stoull(env, &used);
                if (used == std::string(env).size()) return s;
            } catch (const std::exception&) {
            }
            throw Error(ErrorCode::usage, std::string("CFTM_SEED is not an unsigned integer: ") + env);
        }
        return 0;
    }
};

void add_seed(CLI::App* app, SeedOption& seed) {
    app->add_option_function<Seed>(
           "--seed", [&seed](const Seed& s) { seed.value = s, seed.given = true; },
           "64-bit RNG seed (falls back to CFTM_SEED, then 0)");
}

FileRecord input_record(const std::string& path) { return {path, sha256_file(path)}; }

struct Context {
    std::vector<std::string> args;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

void finish(const Context& ctx, const std::string& command, const json& config, Seed seed,
            const std::string& flag, const std::string& location, std::vector<FileRecord> inputs,
            const OutputSet& outputs, const fs::path& manifest_path, std::ostream& out) {
    RunManifest m;
    m.command = command;
    m.argv = ctx.args;
    m.config = config;
    m.seed = seed;
    m.output_flag = flag;
    m.output_location = location;
    m.inputs = std::move(inputs);
    m.outputs = outputs.records();
    m.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    write_text_file(manifest_path, dump_json(m.to_json()));
    out << command << ": wrote " << outputs.records().size() << " file(s) to " << outputs.dir().string()
        << ", manifest " << manifest_path.string() << "\n";
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::usage, std::string(what) + ": not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::usage, std::string(what) + ": empty list");
    return out;
}

std::string h_label(double h) {
    std::ostringstream s;
    s << h;
    return s.str();
}

// ---- sample-fbm ----

struct SampleFbmOptions {
    double h = 0.5;
    std::string grid;
    std::size_t n = 0;
    std::size_t paths = 1;
    SeedOption seed;
    std::string out;
    std::string format = "csv";
};

void cmd_sample_fbm(const SampleFbmOptions& o, const Context& ctx, std::ostream& out) {
    const HurstIndex h(o.h);
    const TimeGrid grid = o.grid.empty() ? TimeGrid::uniform(o.n) : TimeGrid(parse_list(o.grid, "--grid"));
    const Seed seed = o.seed.resolve();
    const FbmGenerator gen(grid, h);
    std::vector<FbmPath> paths;
    for (std::size_t p = 0; p < o.paths; ++p) {
        Rng rng(derive_seed(seed, p));
        const Eigen::VectorXd v = gen.sample(rng);
        paths.push_back({grid, std::vector<double>(v.data(), v.data() + v.size()), rng.seed()});
    }
    const fs::path target(o.out);
    if (target.has_parent_path()) prepare_dir(target.parent_path().string());
    OutputSet outputs(target.has_parent_path() ? target.parent_path() : fs::path("."));
    std::ostringstream text;
    if (o.format == "json") {
        json j = to_json(paths);
        j["h"] = o.h;
        j["seed"] = seed;
        text << dump_json(j);
    } else {
        write_paths_csv(text, grid, paths);
    }
    outputs.write(target.filename().string(), text.str());
    const json config = {{"h", o.h}, {"grid", to_json(grid)}, {"paths", o.paths}, {"format", o.format}};
    finish(ctx, "sample-fbm", config, seed, "--out", o.out, {}, outputs, o.out + ".manifest.json", out);
}

// ---- simulate ----

struct SimulateOptions {
    std::string config;
    SeedOption seed;
    std::string out_dir;
};

void cmd_simulate(const SimulateOptions& o, const Context& ctx, std::ostream& out) {
    const ModelConfig config = model_config_from_json(read_json_file(o.config));
    const Seed seed = o.seed.resolve();
    const SyntheticCorpus s = generate_corpus(config, seed);
    OutputSet outputs(prepare_dir(o.out_dir));
    std::ostringstream corpus, vocab;
    write_corpus_jsonl(corpus, s.corpus, s.vocabulary);
    write_vocabulary_csv(vocab, s.vocabulary);
    outputs.write("corpus.jsonl", corpus.str());
    outputs.write("truth.json", dump_json(truth_to_json(s, config)));
    outputs.write("vocabulary.csv", vocab.str());
    finish(ctx, "simulate", to_json(config), seed, "--out-dir", o.out_dir, {input_record(o.config)}, outputs,
           outputs.dir() / "manifest.json", out);
}

// ---- corpus preparation shared by fit and eval ----

struct CorpusOptions {
    std::string path;
    std::size_t min_doc_count = 5;
    double max_doc_fraction = 0.5;
    std::size_t subsample_every = 1;
};

void add_corpus_options(CLI::App* app, CorpusOptions& o) {
    app->add_option("--corpus", o.path, "JSONL corpus")->required();
    app->add_option("--min-doc-count", o.min_doc_count, "drop words in fewer documents")->capture_default_str();
    app->add_option("--max-doc-fraction", o.max_doc_fraction, "drop words in more than this fraction of documents")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--subsample-every", o.subsample_every, "keep every n-th document by input index")
        ->check(at_least_one)
        ->capture_default_str();
}

struct PreparedCorpus {
    Vocabulary vocab;
    Corpus corpus;
    std::size_t documents = 0;
};

PreparedCorpus prepare_corpus(const CorpusOptions& o) {
    RawCorpus raw = load_corpus(o.path);
    if (o.subsample_every > 1) raw = subsample_every(raw, o.subsample_every);
    PreparedCorpus p;
    p.documents = raw.documents.size();
    p.vocab = build_vocabulary(raw, {o.min_doc_count, o.max_doc_fraction});
    p.corpus = encode_corpus(raw, p.vocab);
    return p;
}

json corpus_options_json(const CorpusOptions& o) {
    return {{"corpus", o.path},
            {"min_doc_count", o.min_doc_count},
            {"max_doc_fraction", o.max_doc_fraction},
            {"subsample_every", o.subsample_every}};
}

// ---- fit ----

struct FitOptions {
    CorpusOptions corpus;
    std::size_t k = 5;
    double h = 0.5;
    std::size_t iters = 2000;
    std::size_t burn_in = 1000;
    std::size_t thinning = 2;
    std::size_t chains = 1;
    std::size_t top_words = 10;
    double nu_alpha = 1.0, sigma_alpha = 1.0, nu_beta = 1.0, sigma_beta = 0.0;
    std::string sampler = "ess";
    bool freeze_beta = false;
    SeedOption seed;
    std::string out_dir;
};

void cmd_fit(const FitOptions& o, const Context& ctx, std::ostream& out) {
    const PreparedCorpus p = prepare_corpus(o.corpus);
    const ModelConfig config = make_config(o.k, p.vocab.size(), HurstIndex(o.h), p.corpus.grid, o.nu_alpha,
                                           o.sigma_alpha, o.nu_beta, o.sigma_beta);
    FitConfig fc;
    fc.iterations = o.iters;
    fc.burn_in = o.burn_in;
    fc.thinning = o.thinning;
    fc.seed = o.seed.resolve();
    fc.chains = o.chains;
    fc.top_words = o.top_words;
    fc.sampler = o.sampler == "rwm" ? SamplerKind::rwm : SamplerKind::ess;
    fc.freeze_beta = o.freeze_beta;
    const FitReport report = fit(p.corpus, config, fc);

    OutputSet outputs(prepare_dir(o.out_dir));
    std::ostringstream dist, sd, top, trace, vocab;
    write_topic_dist_csv(dist, p.corpus.grid, report.topic_dist);
    write_topic_dist_csv(sd, p.corpus.grid, report.topic_dist_sd);
    write_top_words_csv(top, report, p.vocab);
    write_loglik_csv(trace, report);
    write_vocabulary_csv(vocab, p.vocab);
    outputs.write("topic_dist.csv", dist.str());
    outputs.write("topic_dist_sd.csv", sd.str());
    outputs.write("top_words.csv", top.str());
    outputs.write("loglik_trace.csv", trace.str());
    outputs.write("vocabulary.csv", vocab.str());
    outputs.write("report.json", dump_json(to_json(report, p.vocab, p.corpus)));

    json echo = corpus_options_json(o.corpus);
    echo["model"] = to_json(report.config);
    echo["fit"] = to_json(fc);
    finish(ctx, "fit", echo, fc.seed, "--out-dir", o.out_dir, {input_record(o.corpus.path)}, outputs,
           outputs.dir() / "manifest.json", out);
}

// ---- diagnose ----

struct DiagnoseOptions {
    std::vector<double> h;
    std::size_t horizon = 100000;
    std::string scales = "2,4";
    double t = 1.0;
    std::size_t draws = 10000;
    std::size_t transfer_k = 3;
    std::size_t transfer_length = 4096;
    bool transfer = false;
    SeedOption seed;
    std::string out;
};

void cmd_diagnose(const DiagnoseOptions& o, const Context& ctx, std::ostream& out) {
    const Seed seed = o.seed.resolve();
    const std::vector<double> scales = parse_list(o.scales, "--scales");
    OutputSet outputs(prepare_dir(o.out));
    json summary = {{"seed", seed}, {"lrd", json::array()}, {"self_similarity", json::array()},
                    {"regularity_transfer", json::array()}};
    std::ostringstream ss_csv;
    write_csv_row(ss_csv, {"h", "a", "t", "num_draws", "var_t", "var_at", "ratio"});
    std::uint64_t stream = 0;
    for (double hv : o.h) {
        const HurstIndex h(hv);
        const LrdReport lrd = classify_lrd(h, o.horizon);
        std::ostringstream csv;
        write_lrd_csv(csv, lrd);
        outputs.write("lrd_h" + h_label(hv) + ".csv", csv.str());
        summary["lrd"].push_back(to_json(lrd));
        for (double a : scales) {
            const SelfSimilarityReport r = self_similarity_check(h, a, o.t, o.draws, derive_seed(seed, stream++));
            write_csv_row(ss_csv, {format_double(hv), format_double(a), format_double(o.t), std::to_string(o.draws),
                                   format_double(r.var_t), format_double(r.var_at), format_double(r.ratio)});
            summary["self_similarity"].push_back(to_json(r));
        }
        if (o.transfer) {
            summary["regularity_transfer"].push_back(to_json(
                empirical_regularity_transfer(o.transfer_k, h, o.transfer_length, derive_seed(seed, stream++))));
        }
    }
    outputs.write("self_similarity.csv", ss_csv.str());
    outputs.write("diagnostics.json", dump_json(summary));
    const json config = {{"h", o.h}, {"horizon", o.horizon}, {"scales", scales}, {"t", o.t}, {"draws", o.draws},
                         {"transfer", o.transfer}, {"transfer_k", o.transfer_k},
                         {"transfer_length", o.transfer_length}};
    finish(ctx, "diagnose", config, seed, "--out", o.out, {}, outputs, outputs.dir() / "manifest.json", out);
}

// ---- eval ----

struct EvalOptions {
    CorpusOptions corpus;
    std::string params;
    std::size_t num_mc = 1000;
    SeedOption seed;
    std::string out;
};

void cmd_eval(const EvalOptions& o, const Context& ctx, std::ostream& out) {
    const PreparedCorpus p = prepare_corpus(o.corpus);
    ModelConfig config = params_from_json(read_json_file(o.params));
    if (config.vocab_size != p.vocab.size()) {
        throw DomainError("params vocab_size " + std::to_string(config.vocab_size) +
                          " does not match the filtered corpus vocabulary (" + std::to_string(p.vocab.size()) + ")");
    }
    config.grid = p.corpus.grid;
    config.tokens_per_time.assign(config.grid.size(), 1);
    const Seed seed = o.seed.resolve();
    Rng rng(seed);
    const std::vector<double> ll = corpus_log_likelihood(p.corpus, config, o.num_mc, rng);

    const fs::path target(o.out);
    if (target.has_parent_path()) prepare_dir(target.parent_path().string());
    OutputSet outputs(target.has_parent_path() ? target.parent_path() : fs::path("."));
    std::ostringstream csv;
    write_eval_csv(csv, p.corpus, ll);
    outputs.write(target.filename().string(), csv.str());
    json echo = corpus_options_json(o.corpus);
    echo["params"] = to_json(config);
    echo["num_mc"] = o.num_mc;
    finish(ctx, "eval", echo, seed, "--out", o.out, {input_record(o.corpus.path), input_record(o.params)}, outputs,
           o.out + ".manifest.json", out);
}

// ---- replay ----

struct ReplayOptions {
    std::string manifest;
    std::string out_dir;
};

std::vector<std::string> substitute_output(const RunManifest& m, const std::string& location) {
    std::vector<std::string> args = m.argv;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == m.output_flag && i + 1 < args.size()) {
            args[i + 1] = location;
            return args;
        }
        if (args[i].rfind(m.output_flag + "=", 0) == 0) {
            args[i] = m.output_flag + "=" + location;
            return args;
        }
    }
    throw ParseError("manifest argv lacks " + m.output_flag);
}

void cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
    const RunManifest m = load_manifest(o.manifest);
    for (const auto& in : m.inputs) {
        if (sha256_file(in.path) != in.sha256) throw Error(ErrorCode::mismatch, "input changed since the run: " + in.path);
    }
    const fs::path dir = o.out_dir.empty() ? fs::temp_directory_path() / ("cftm-replay-" + std::to_string(m.seed))
                                           : fs::path(o.out_dir);
    prepare_dir(dir.string());
    const bool to_file = m.output_flag == "--out" && m.command != "diagnose";
    const fs::path location = to_file ? dir / fs::path(m.output_location).filename() : dir;
    std::ostringstream sink;
    const int code = run(substitute_output(m, location.string()), sink, err);
    if (code != 0) throw Error(ErrorCode::mismatch, "replayed command failed with exit code " + std::to_string(code));
    std::size_t matched = 0;
    for (const auto& rec : m.outputs) {
        const fs::path produced = dir / rec.path;
        if (!fs::exists(produced)) throw Error(ErrorCode::mismatch, "replay did not produce " + rec.path);
        if (sha256_file(produced) != rec.sha256) throw Error(ErrorCode::mismatch, "output differs: " + rec.path);
        ++matched;
    }
    out << "replay: " << matched << " output(s) reproduced byte-identically in " << dir.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Continuous-time fractional topic model toolkit", "cftm"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    Context ctx{args};

    SampleFbmOptions sf;
    auto* c_sf = app.add_subcommand("sample-fbm", "sample fractional Brownian motion paths");
    c_sf->add_option("--h", sf.h, "Hurst index in (0,1)")->required()->check(open_unit_interval);
    auto* grid_opt = c_sf->add_option("--grid", sf.grid, "comma-separated time points starting at 0");
    auto* n_opt = c_sf->add_option("--n", sf.n, "number of unit steps (grid 0..n)");
    grid_opt->excludes(n_opt);
    c_sf->add_option("--paths", sf.paths, "number of independent paths")->check(at_least_one)->capture_default_str();
    c_sf->add_option("--format", sf.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    c_sf->add_option("--out", sf.out, "output file")->required();
    add_seed(c_sf, sf.seed);

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic corpus with recorded ground truth");
    c_sim->add_option("--config", sim.config, "model config JSON")->required();
    c_sim->add_option("--out-dir", sim.out_dir, "output directory")->required();
    add_seed(c_sim, sim.seed);

    FitOptions fo;
    auto* c_fit = app.add_subcommand("fit", "MCMC posterior inference on a corpus");
    add_corpus_options(c_fit, fo.corpus);
    c_fit->add_option("--k", fo.k, "number of topics")->check(at_least_one)->capture_default_str();
    c_fit->add_option("--h", fo.h, "Hurst index in (0,1)")->required()->check(open_unit_interval);
    c_fit->add_option("--iters", fo.iters, "total MCMC iterations")->check(at_least_one)->capture_default_str();
    c_fit->add_option("--burn-in", fo.burn_in, "burn-in iterations")->capture_default_str();
    c_fit->add_option("--thinning", fo.thinning, "keep every n-th sample")->check(at_least_one)->capture_default_str();
    c_fit->add_option("--chains", fo.chains, "parallel chains")->check(at_least_one)->capture_default_str();
    c_fit->add_option("--top-words", fo.top_words, "words listed per topic")->capture_default_str();
    c_fit->add_option("--nu-alpha", fo.nu_alpha, "initial variance of alpha")->capture_default_str();
    c_fit->add_option("--sigma-alpha", fo.sigma_alpha, "diffusion scale of alpha")->capture_default_str();
    c_fit->add_option("--nu-beta", fo.nu_beta, "initial variance of beta")->capture_default_str();
    c_fit->add_option("--sigma-beta", fo.sigma_beta, "diffusion scale of beta")->capture_default_str();
    c_fit->add_option("--sampler", fo.sampler, "ess or rwm")->check(CLI::IsMember({"ess", "rwm"}))->capture_default_str();
    c_fit->add_flag("--freeze-beta", fo.freeze_beta, "hold word parameters at their prior mean");
    c_fit->add_option("--out-dir", fo.out_dir, "output directory")->required();
    add_seed(c_fit, fo.seed);

    DiagnoseOptions dg;
    auto* c_dg = app.add_subcommand("diagnose", "long-range dependence and self-similarity tables");
    c_dg->add_option("--h", dg.h, "one or more Hurst indices")->required()->check(open_unit_interval);
    c_dg->add_option("--horizon", dg.horizon, "number of lags summed (>= 1000)")->capture_default_str();
    c_dg->add_option("--scales", dg.scales, "comma-separated self-similarity factors")->capture_default_str();
    c_dg->add_option("--t", dg.t, "base time for self-similarity")->check(CLI::PositiveNumber)->capture_default_str();
    c_dg->add_option("--draws", dg.draws, "draws per self-similarity check")->capture_default_str();
    c_dg->add_flag("--transfer", dg.transfer, "also estimate regularity of softmax coordinates");
    c_dg->add_option("--transfer-k", dg.transfer_k, "topics for the regularity check")->capture_default_str();
    c_dg->add_option("--transfer-length", dg.transfer_length, "path length for the regularity check")->capture_default_str();
    c_dg->add_option("--out", dg.out, "output directory")->required();
    add_seed(c_dg, dg.seed);

    EvalOptions ev;
    auto* c_ev = app.add_subcommand("eval", "per-time Monte Carlo log-likelihood");
    add_corpus_options(c_ev, ev.corpus);
    c_ev->add_option("--params", ev.params, "parameter JSON")->required();
    c_ev->add_option("--num-mc", ev.num_mc, "Monte Carlo draws")->check(at_least_one)->capture_default_str();
    c_ev->add_option("--out", ev.out, "output CSV")->required();
    add_seed(c_ev, ev.seed);

    ReplayOptions rp;
    auto* c_rp = app.add_subcommand("replay", "rerun a recorded command and verify its outputs");
    c_rp->add_option("--manifest", rp.manifest, "manifest JSON")->required();
    c_rp->add_option("--out-dir", rp.out_dir, "where to write the reproduced outputs");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (c_sf->parsed() && sf.grid.empty() && n_opt->count() == 0) {
            throw Error(ErrorCode::usage, "sample-fbm needs --grid or --n");
        }
        if (*c_sf) cmd_sample_fbm(sf, ctx, out);
        else if (*c_sim) cmd_simulate(sim, ctx, out);
        else if (*c_fit) cmd_fit(fo, ctx, out);
        else if (*c_dg) cmd_diagnose(dg, ctx, out);
        else if (*c_ev) cmd_eval(ev, ctx, out);
        else if (*c_rp) cmd_replay(rp, out, err);
        return 0;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: code=" << to_string(ErrorCode::usage) << " message=" << one_line(e.what()) << "\n";
        return exit_code(ErrorCode::usage);
    } catch (const Error& e) {
        err << "error: code=" << to_string(e.code()) << " message=" << one_line(e.what()) << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: code=internal_error message=" << one_line(e.what()) << "\n";
        return 1;
    }
}

}  // namespace cftm::cli
