#include "cftm/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cftm/error.hpp"

namespace cftm {
namespace {

using nlohmann::json;

// "YYYY-MM-DD" with an optional "THH:MM[:SS]" suffix, as fractional days since epoch.
std::optional<double> parse_iso_date(const std::string& text) {
    int y = 0;
    unsigned mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    char tail = 0;
    const int n = std::sscanf(text.c_str(), "%4d-%2u-%2u%c%2u:%2u:%2u", &y, &mo, &d, &tail, &hh,
                              &mm, &ss);
    if (n < 3 || text.size() < 10) return std::nullopt;
    if (n > 3 && tail != 'T' && tail != ' ') return std::nullopt;
    if (n == 4 || n == 5) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                          std::chrono::day{d}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) + (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
}

}  // namespace

RawCorpus parse_corpus(std::istream& in) {
    RawCorpus out;
    std::vector<double> raw_times;
    std::vector<std::string> raw_labels;
    std::optional<bool> dated;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!rec.is_object()) throw ParseError("record is not a JSON object", lineno);

        RawDocument doc;
        if (!rec.contains("doc_id") || !rec["doc_id"].is_string()) {
            throw ParseError("record missing string field 'doc_id'", lineno);
        }
        doc.doc_id = rec["doc_id"].get<std::string>();
        if (!rec.contains("tokens")) {
            throw ParseError("record '" + doc.doc_id + "' is missing field 'tokens'", lineno);
        }
        if (!rec["tokens"].is_array()) {
            throw ParseError("record '" + doc.doc_id + "': 'tokens' must be an array", lineno);
        }
        for (const auto& tok : rec["tokens"]) {
            if (!tok.is_string()) {
                throw ParseError("record '" + doc.doc_id + "': tokens must be strings", lineno);
            }
            doc.tokens.push_back(tok.get<std::string>());
        }
        if (!rec.contains("timestamp")) {
            throw ParseError("record '" + doc.doc_id + "' is missing field 'timestamp'", lineno);
        }
        const auto& ts = rec["timestamp"];
        double t = 0.0;
        bool is_date = false;
        if (ts.is_number()) {
            t = ts.get<double>();
            if (!std::isfinite(t)) throw ParseError("non-finite timestamp", lineno);
        } else if (ts.is_string()) {
            const auto parsed = parse_iso_date(ts.get<std::string>());
            if (!parsed) {
                throw ParseError("record '" + doc.doc_id + "': unrecognized date '" +
                                     ts.get<std::string>() + "'",
                                 lineno);
            }
            t = *parsed;
            is_date = true;
        } else {
            throw ParseError("record '" + doc.doc_id + "': timestamp must be a number or ISO date",
                             lineno);
        }
        if (dated && *dated != is_date) {
            throw ParseError("mixed numeric and date timestamps", lineno);
        }
        dated = is_date;
        raw_times.push_back(t);
        raw_labels.push_back(ts.is_string() ? ts.get<std::string>() : ts.dump());
        out.documents.push_back(std::move(doc));
    }
    if (out.documents.empty()) throw DomainError("corpus file contains no records");

    const auto it = std::min_element(raw_times.begin(), raw_times.end());
    const double origin = *it;
    out.time_origin = raw_labels[static_cast<std::size_t>(it - raw_times.begin())];
    out.dated = dated.value_or(false);
    for (std::size_t i = 0; i < out.documents.size(); ++i) {
        out.documents[i].timestamp = raw_times[i] - origin;
    }
    return out;
}

RawCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open corpus file " + path.string());
    return parse_corpus(in);
}

RawCorpus subsample_every(const RawCorpus& corpus, std::size_t every) {
    if (every == 0) throw DomainError("subsampling interval must be positive");
    RawCorpus out;
    out.dated = corpus.dated;
    out.time_origin = corpus.time_origin;
    for (std::size_t i = 0; i < corpus.documents.size(); i += every) {
        out.documents.push_back(corpus.documents[i]);
    }
    // Re-anchor so the grid still starts at 0.
    double origin = out.documents.front().timestamp;
    for (const auto& d : out.documents) origin = std::min(origin, d.timestamp);
    for (auto& d : out.documents) d.timestamp -= origin;
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::size_t> doc_frequency)
    : words_(std::move(words)), doc_frequency_(std::move(doc_frequency)) {
    if (words_.size() != doc_frequency_.size()) {
        throw DomainError("vocabulary words and frequencies differ in length");
    }
    for (WordId i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], i).second) {
            throw DomainError("duplicate vocabulary word '" + words_[i] + "'");
        }
    }
}

std::optional<WordId> Vocabulary::id(const std::string& word) const {
    const auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vocabulary build_vocabulary(const RawCorpus& corpus, const VocabularyFilter& filter) {
    if (corpus.documents.empty()) throw DomainError("cannot build a vocabulary from zero documents");
    if (!(filter.max_doc_fraction > 0.0) || filter.max_doc_fraction > 1.0) {
        throw DomainError("max_doc_fraction must lie in (0,1]");
    }
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus.documents) {
        const std::set<std::string> unique(doc.tokens.begin(), doc.tokens.end());
        for (const auto& tok : unique) ++df[tok];
    }
    const auto num_docs = static_cast<double>(corpus.documents.size());
    // 1e-9 guards fractions like 0.3 * 10 landing just under an integer.
    const auto max_df = static_cast<std::size_t>(std::floor(filter.max_doc_fraction * num_docs + 1e-9));

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [tok, count] : df) {
        if (count >= filter.min_doc_count && count <= max_df) kept.emplace_back(tok, count);
    }
    if (kept.empty()) {
        throw DomainError("vocabulary is empty after frequency filtering (min_doc_count=" +
                          std::to_string(filter.min_doc_count) + ", max_doc_fraction=" +
                          std::to_string(filter.max_doc_fraction) +
                          "); relax the thresholds");
    }
    // std::map iteration is lexicographic, so a stable sort on frequency keeps that tie order.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> words;
    std::vector<std::size_t> freqs;
    for (auto& [tok, count] : kept) {
        words.push_back(std::move(tok));
        freqs.push_back(count);
    }
    return Vocabulary(std::move(words), std::move(freqs));
}

std::size_t Corpus::num_tokens() const {
    std::size_t n = 0;
    for (const auto& b : bags) n += b.size();
    return n;
}

std::vector<std::vector<std::size_t>> Corpus::word_counts() const {
    std::vector<std::vector<std::size_t>> out(bags.size(), std::vector<std::size_t>(vocab_size, 0));
    for (std::size_t t = 0; t < bags.size(); ++t) {
        for (WordId w : bags[t]) ++out[t].at(w);
    }
    return out;
}

Corpus encode_corpus(const RawCorpus& raw, const Vocabulary& vocab) {
    if (raw.documents.empty()) throw DomainError("cannot encode an empty corpus");
    std::map<double, std::size_t> slot;
    for (const auto& doc : raw.documents) slot.emplace(doc.timestamp, 0);
    std::vector<double> times;
    for (auto& [t, idx] : slot) {
        idx = times.size();
        times.push_back(t);
    }
    const double origin = times.front();
    for (double& t : times) t -= origin;

    Corpus out;
    out.grid = TimeGrid(std::move(times));
    out.bags.assign(slot.size(), {});
    out.doc_counts.assign(slot.size(), 0);
    out.vocab_size = vocab.size();
    for (const auto& doc : raw.documents) {
        const std::size_t t = slot.at(doc.timestamp);
        ++out.doc_counts[t];
        for (const auto& tok : doc.tokens) {
            if (auto id = vocab.id(tok)) out.bags[t].push_back(*id);
        }
    }
    for (std::size_t t = 0; t < out.bags.size(); ++t) {
        std::sort(out.bags[t].begin(), out.bags[t].end());
        if (out.bags[t].empty()) {
            std::cerr << "warning: timestamp " << out.grid[t]
                      << " has no in-vocabulary tokens; keeping an empty bag\n";
        }
    }
    return out;
}

std::vector<std::string> decode_bag(const std::vector<WordId>& bag, const Vocabulary& vocab) {
    std::vector<std::string> out;
    out.reserve(bag.size());
    for (WordId w : bag) out.push_back(vocab.word(w));
    return out;
}

}  // namespace cftm
