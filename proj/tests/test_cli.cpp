#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cftm/io.hpp"
#include "cftm/manifest.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using cftm::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cftm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path work(const std::string& name) {
    const fs::path p = fs::path(CFTM_TEST_DIR) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

const std::vector<std::string> kDemoFilter{"--k", "2", "--min-doc-count", "1", "--max-doc-fraction", "1"};

}  // namespace

TEST_CASE("sample-fbm writes one row per grid point") {
    const fs::path dir = work("sample");
    const Result r = cli({"sample-fbm", "--h", "0.3", "--n", "64", "--seed", "7", "--out", (dir / "a.csv").string()});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(read_file(dir / "a.csv"));
    REQUIRE(lines.size() == 66);
    CHECK(lines[0] == "time,path_1");
    CHECK(lines[1] == "0,0");
    CHECK(lines[65].rfind("64,", 0) == 0);
    CHECK(fs::exists(dir / "a.csv.manifest.json"));

    REQUIRE(cli({"sample-fbm", "--h", "0.3", "--n", "64", "--seed", "7", "--out", (dir / "b.csv").string()}).code == 0);
    CHECK(cftm::sha256_file(dir / "a.csv") == cftm::sha256_file(dir / "b.csv"));

    REQUIRE(cli({"sample-fbm", "--h", "0.3", "--n", "64", "--paths", "3", "--format", "json", "--seed", "7", "--out",
                 (dir / "c.json").string()})
                .code == 0);
    const json j = cftm::read_json_file(dir / "c.json");
    CHECK(j["paths"].size() == 3);
}

TEST_CASE("usage errors are single lines with exit code 2") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"sample-fbm", "--h", "1.0", "--n", "64", "--out", "x.csv"},
             {"sample-fbm", "--h", "0", "--n", "64", "--out", "x.csv"},
             {"fit", "--corpus", CFTM_DEMO_CORPUS, "--h", "0.5", "--k", "0", "--out-dir", "x"},
             {"no-such-command"}}) {
        const Result r = cli(args);
        CHECK(r.code == 2);
        CHECK(r.err.rfind("error: code=usage_error message=", 0) == 0);
        CHECK(lines_of(r.err).size() == 1);
    }
    CHECK(cli({"sample-fbm", "--h", "1.0", "--n", "4", "--out", "x.csv"}).err.find("(0,1)") != std::string::npos);
}

TEST_CASE("domain and io errors map to their exit codes") {
    const fs::path dir = work("errors");
    const Result missing = cli({"fit", "--corpus", (dir / "none.jsonl").string(), "--h", "0.5", "--out-dir", dir.string()});
    CHECK(missing.code != 0);
    CHECK(missing.err.rfind("error: code=", 0) == 0);

    std::ofstream(dir / "bad.jsonl") << "{\"doc_id\": 1}\n";
    const Result parse = cli({"fit", "--corpus", (dir / "bad.jsonl").string(), "--h", "0.5", "--out-dir", dir.string()});
    CHECK(parse.code == 6);
    CHECK(parse.err.find("code=parse_error") != std::string::npos);

    const Result empty_vocab = cli({"fit", "--corpus", CFTM_DEMO_CORPUS, "--h", "0.5", "--out-dir", dir.string()});
    CHECK(empty_vocab.code == 3);
    CHECK(empty_vocab.err.find("code=domain_error") != std::string::npos);
}

TEST_CASE("seed falls back to the environment") {
    const fs::path dir = work("env_seed");
    ::setenv("CFTM_SEED", "11", 1);
    REQUIRE(cli({"sample-fbm", "--h", "0.6", "--n", "16", "--out", (dir / "env.csv").string()}).code == 0);
    ::unsetenv("CFTM_SEED");
    REQUIRE(cli({"sample-fbm", "--h", "0.6", "--n", "16", "--seed", "11", "--out", (dir / "flag.csv").string()}).code == 0);
    REQUIRE(cli({"sample-fbm", "--h", "0.6", "--n", "16", "--out", (dir / "zero.csv").string()}).code == 0);
    CHECK(read_file(dir / "env.csv") == read_file(dir / "flag.csv"));
    CHECK(read_file(dir / "env.csv") != read_file(dir / "zero.csv"));
    CHECK(cftm::load_manifest(dir / "env.csv.manifest.json").seed == 11);
}

TEST_CASE("simulate, fit, eval and replay") {
    const fs::path dir = work("pipeline");
    const std::string sim = (dir / "sim").string();
    REQUIRE(cli({"simulate", "--config", CFTM_DEMO_CONFIG, "--seed", "3", "--out-dir", sim}).code == 0);
    for (const char* f : {"corpus.jsonl", "truth.json", "vocabulary.csv", "manifest.json"}) CHECK(fs::exists(dir / "sim" / f));
    const std::string sim2 = (dir / "sim2").string();
    REQUIRE(cli({"simulate", "--config", CFTM_DEMO_CONFIG, "--seed", "3", "--out-dir", sim2}).code == 0);
    CHECK(read_file(dir / "sim" / "corpus.jsonl") == read_file(dir / "sim2" / "corpus.jsonl"));

    const std::string corpus = (dir / "sim" / "corpus.jsonl").string();
    std::vector<std::string> fit_args{"fit", "--corpus", corpus, "--h", "0.3", "--iters", "200", "--burn-in", "100", "--seed", "5"};
    fit_args.insert(fit_args.end(), kDemoFilter.begin(), kDemoFilter.end());
    auto with_out = [&](const std::string& out) {
        auto a = fit_args;
        a.insert(a.end(), {"--out-dir", out});
        return a;
    };
    REQUIRE(cli(with_out((dir / "fit1").string())).code == 0);
    REQUIRE(cli(with_out((dir / "fit2").string())).code == 0);
    for (const char* f : {"topic_dist.csv", "topic_dist_sd.csv", "top_words.csv", "loglik_trace.csv", "vocabulary.csv", "report.json"}) {
        CAPTURE(f);
        CHECK(cftm::sha256_file(dir / "fit1" / f) == cftm::sha256_file(dir / "fit2" / f));
    }
    const auto topic_lines = lines_of(read_file(dir / "fit1" / "topic_dist.csv"));
    CHECK(topic_lines.size() == 12);
    CHECK(topic_lines[0] == "time_index,time,topic_1,topic_2");

    const cftm::RunManifest m = cftm::load_manifest(dir / "fit1" / "manifest.json");
    CHECK(m.command == "fit");
    CHECK(m.seed == 5);
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].sha256 == cftm::sha256_file(corpus));

    const Result replay = cli({"replay", "--manifest", (dir / "fit1" / "manifest.json").string(), "--out-dir", (dir / "replay").string()});
    CHECK(replay.code == 0);
    CHECK(replay.out.find("byte-identically") != std::string::npos);

    std::ofstream(dir / "params.json") << R"({"schema":"cftm.params/1","num_topics":2,"vocab_size":20,"h":0.1,
        "alpha":{"nu":1,"sigma":0.5},"beta":{"nu":1}})";
    std::vector<std::string> eval_args{"eval", "--corpus", corpus, "--params", (dir / "params.json").string(), "--num-mc", "200",
                                       "--min-doc-count", "1", "--max-doc-fraction", "1", "--seed", "2", "--out",
                                       (dir / "eval.csv").string()};
    REQUIRE(cli(eval_args).code == 0);
    CHECK(lines_of(read_file(dir / "eval.csv")).size() == 12);
    const Result eval_replay = cli({"replay", "--manifest", (dir / "eval.csv.manifest.json").string(), "--out-dir", (dir / "eval_replay").string()});
    CHECK(eval_replay.code == 0);

    // tampered input is reported as a mismatch
    std::ofstream(corpus, std::ios::app) << "\n";
    const Result tampered = cli({"replay", "--manifest", (dir / "fit1" / "manifest.json").string(), "--out-dir", (dir / "replay2").string()});
    CHECK(tampered.code == 8);
    CHECK(tampered.err.find("code=mismatch_error") != std::string::npos);
}

TEST_CASE("diagnose writes tables") {
    const fs::path dir = work("diagnose");
    const Result r = cli({"diagnose", "--h", "0.25", "--h", "0.75", "--horizon", "2000", "--draws", "2000", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "diagnostics.json"));
    CHECK(fs::exists(dir / "self_similarity.csv"));
    const auto lrd = lines_of(read_file(dir / "lrd_h0.75.csv"));
    CHECK(lrd.size() == 2001);
    const json j = cftm::read_json_file(dir / "diagnostics.json");
    CHECK(j.dump().find("long_term_dependency") != std::string::npos);
    CHECK(j.dump().find("roughness") != std::string::npos);
}

TEST_CASE("demo corpus contrast between rough and smooth fits") {
    const fs::path dir = work("demo");
    json summary[2];
    const char* hs[2] = {"0.1", "0.9"};
    for (int i = 0; i < 2; ++i) {
        std::vector<std::string> args{"fit", "--corpus", CFTM_DEMO_CORPUS, "--h", hs[i], "--seed", "1", "--out-dir",
                                      (dir / hs[i]).string()};
        args.insert(args.end(), kDemoFilter.begin(), kDemoFilter.end());
        REQUIRE(cli(args).code == 0);
        summary[i] = cftm::read_json_file(dir / hs[i] / "report.json")["trajectory"];
    }
    CHECK(summary[0]["max_step_time"].get<double>() == 5.0);
    CHECK(std::abs(summary[0]["shift_zscore"][0].get<double>()) > 3.0);
    CHECK(summary[1]["max_step_change"].get<double>() < summary[0]["max_step_change"].get<double>());
}

TEST_CASE("the binary reports errors on stderr with a nonzero exit") {
    const fs::path dir = work("binary");
    const std::string err_file = (dir / "err.txt").string();
    const std::string cmd = std::string(CFTM_BINARY) + " sample-fbm --h 1.5 --n 8 --out " + (dir / "x.csv").string() + " 2> " + err_file;
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
    CHECK(read_file(err_file).rfind("error: code=usage_error", 0) == 0);
    const std::string ok = std::string(CFTM_BINARY) + " sample-fbm --h 0.5 --n 8 --out " + (dir / "y.csv").string();
    CHECK(std::system(ok.c_str()) == 0);
}
