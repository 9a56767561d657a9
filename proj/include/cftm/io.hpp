#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cftm/corpus.hpp"
#include "cftm/diagnostics.hpp"
#include "cftm/fbm.hpp"
#include "cftm/fit.hpp"
#include "cftm/generative.hpp"

namespace cftm {

using json = nlohmann::ordered_json;

inline constexpr const char* kModelConfigSchema = "cftm.model_config/1";
inline constexpr const char* kParamsSchema = "cftm.params/1";

// ---- CSV (RFC 4180) ----

/// Shortest round-trip representation (%.17g).
std::string format_double(double v);
std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// One row per grid point: time, then one column per path.
void write_paths_csv(std::ostream& out, const TimeGrid& grid, const std::vector<FbmPath>& paths);
void write_covariance_csv(std::ostream& out, const FbmCovariance& cov);
void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocab);
/// time_index, time, topic_1..topic_K
void write_topic_dist_csv(std::ostream& out, const TimeGrid& grid, const Eigen::MatrixXd& topic_dist);
/// topic, rank, word_id, token, probability
void write_top_words_csv(std::ostream& out, const FitReport& report, const Vocabulary& vocab);
/// chain, iteration, loglik
void write_loglik_csv(std::ostream& out, const FitReport& report);
/// m, gamma, partial_sum
void write_lrd_csv(std::ostream& out, const LrdReport& report);
/// time_index, time, num_tokens, log_likelihood
void write_eval_csv(std::ostream& out, const Corpus& corpus, const std::vector<double>& per_time);

// ---- JSON ----

json to_json(const TimeGrid& grid);
json to_json(const FbmCovariance& cov);
json to_json(const std::vector<FbmPath>& paths);
json to_json(const ModelConfig& config);
json to_json(const FitConfig& fc);
json to_json(const FitReport& report, const Vocabulary& vocab, const Corpus& corpus);
json to_json(const LrdReport& report);
json to_json(const SelfSimilarityReport& report);
json to_json(const RegularityTransferReport& report);
json to_json(const LdaEquivalenceReport& report);
/// Ground-truth sidecar: config echo, seed, paths and assignments (1-based).
json truth_to_json(const SyntheticCorpus& synthetic, const ModelConfig& config);

/// Parses a versioned model config. Unknown or missing required fields raise
/// ParseError naming the field; invalid values raise DomainError.
ModelConfig model_config_from_json(const json& j);
/// Parses model parameters for likelihood evaluation. The grid and token
/// counts come from the corpus, so those fields are not accepted here.
ModelConfig params_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
/// Writes `text` to `path`, throwing Error(io) on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump_json(const json& j);

// ---- corpus files ----

/// One JSONL record per grid point: doc_id "t<index>", numeric timestamp, tokens.
void write_corpus_jsonl(std::ostream& out, const Corpus& corpus, const Vocabulary& vocab);

}  // namespace cftm
