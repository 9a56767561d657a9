#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cftm/fbm.hpp"

namespace cftm {

// Word ids and topic indices are 0-based in memory. Everything serialized
// (CSV, JSON, CLI tables) uses 1-based ids.
using WordId = std::size_t;

struct RawDocument {
    std::string doc_id;
    double timestamp = 0.0;  // offset from the earliest record, in input units or days
    std::vector<std::string> tokens;
};

struct RawCorpus {
    std::vector<RawDocument> documents;
    bool dated = false;       // timestamps were ISO dates, now day offsets
    std::string time_origin;  // earliest date, or the earliest numeric timestamp
};

/// Reads UTF-8 JSONL, one {doc_id, timestamp, tokens} record per line.
/// Blank lines are skipped. Throws ParseError (with line number) for
/// malformed records and DomainError for an empty file.
RawCorpus load_corpus(const std::filesystem::path& path);
RawCorpus parse_corpus(std::istream& in);

/// Keeps every index-th document (index-equal-interval subsampling).
RawCorpus subsample_every(const RawCorpus& corpus, std::size_t every);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> words, std::vector<std::size_t> doc_frequency);

    std::size_t size() const noexcept { return words_.size(); }
    const std::string& word(WordId id) const { return words_.at(id); }
    std::optional<WordId> id(const std::string& word) const;
    std::size_t doc_frequency(WordId id) const { return doc_frequency_.at(id); }
    const std::vector<std::string>& words() const noexcept { return words_; }

private:
    std::vector<std::string> words_;
    std::vector<std::size_t> doc_frequency_;
    std::unordered_map<std::string, WordId> index_;
};

struct VocabularyFilter {
    std::size_t min_doc_count = 5;
    double max_doc_fraction = 0.5;
};

/// Retains tokens with min_doc_count <= df <= floor(max_doc_fraction * docs).
/// Ids go by descending document frequency, ties broken lexicographically.
Vocabulary build_vocabulary(const RawCorpus& corpus, const VocabularyFilter& filter = {});

/// Timestamped bags of word ids; documents sharing a timestamp are pooled.
struct Corpus {
    TimeGrid grid{std::vector<double>{0.0}};
    std::vector<std::vector<WordId>> bags;
    std::vector<std::size_t> doc_counts;
    std::size_t vocab_size = 0;

    std::size_t num_times() const noexcept { return bags.size(); }
    std::size_t num_tokens() const;
    /// Per-time word counts, (T+1) rows of vocab_size entries.
    std::vector<std::vector<std::size_t>> word_counts() const;
};

/// Drops out-of-vocabulary tokens and pools documents by timestamp. Bags are
/// stored sorted so token order never matters.
Corpus encode_corpus(const RawCorpus& corpus, const Vocabulary& vocab);

/// Inverse of encoding for one bag.
std::vector<std::string> decode_bag(const std::vector<WordId>& bag, const Vocabulary& vocab);

}  // namespace cftm
