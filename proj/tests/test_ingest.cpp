#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "cftm/corpus.hpp"
#include "cftm/error.hpp"

using namespace cftm;

namespace {

RawCorpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in);
}

// 10 documents; token "x" appears in the first `df` of them.
RawCorpus docs_with_frequency(std::size_t df) {
    RawCorpus c;
    for (std::size_t i = 0; i < 10; ++i) {
        RawDocument d{"d" + std::to_string(i), static_cast<double>(i), {"filler" + std::to_string(i % 2)}};
        if (i < df) d.tokens.push_back("x");
        c.documents.push_back(d);
    }
    return c;
}

bool retains_x(std::size_t df) {
    RawCorpus c = docs_with_frequency(df);
    // keep fillers inside the default window so the vocabulary is never empty
    for (auto& d : c.documents) d.tokens.push_back("anchor" + std::to_string(std::stoi(d.doc_id.substr(1)) % 2));
    const Vocabulary v = build_vocabulary(c);
    return v.id("x").has_value();
}

}  // namespace

TEST_CASE("load numeric timestamps") {
    const RawCorpus c = parse(
        R"({"doc_id":"a","timestamp":0,"tokens":["x"]})"
        "\n"
        R"({"doc_id":"b","timestamp":1,"tokens":["y"]})"
        "\n\n"
        R"({"doc_id":"c","timestamp":2,"tokens":["x","y"]})"
        "\n");
    REQUIRE(c.documents.size() == 3);
    CHECK(c.documents[1].doc_id == "b");
    CHECK_FALSE(c.dated);
    const Vocabulary v({"x", "y"}, {2, 2});
    const Corpus enc = encode_corpus(c, v);
    CHECK(enc.grid == TimeGrid({0.0, 1.0, 2.0}));
}

TEST_CASE("numeric timestamps are shifted to start at zero") {
    const RawCorpus c = parse(
        R"({"doc_id":"a","timestamp":10.5,"tokens":["x"]})"
        "\n"
        R"({"doc_id":"b","timestamp":12,"tokens":["x"]})");
    CHECK(c.documents[0].timestamp == 0.0);
    CHECK(c.documents[1].timestamp == 1.5);
}

TEST_CASE("ISO dates become day offsets") {
    std::string text;
    for (int d = 8; d <= 12; ++d) {
        text += R"({"doc_id":"n)" + std::to_string(d) + R"(","timestamp":"2011-03-)" + (d < 10 ? "0" : "") +
                std::to_string(d) + R"(","tokens":["a"]})" + "\n";
    }
    const RawCorpus c = parse(text);
    CHECK(c.dated);
    const Corpus enc = encode_corpus(c, Vocabulary({"a"}, {5}));
    CHECK(enc.grid == TimeGrid({0.0, 1.0, 2.0, 3.0, 4.0}));
    const RawCorpus timed = parse(R"({"doc_id":"a","timestamp":"2011-03-08T12:00","tokens":[]})"
                                  "\n"
                                  R"({"doc_id":"b","timestamp":"2011-03-08","tokens":[]})");
    CHECK(timed.documents[0].timestamp == doctest::Approx(0.5));
}

TEST_CASE("malformed records") {
    try {
        parse(R"({"doc_id":"a","timestamp":0,"tokens":["x"]})"
              "\n"
              R"({"doc_id":"broken","timestamp":1})");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("broken") != std::string::npos);
        CHECK(std::string(e.what()).find("tokens") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("{not json}\n"), ParseError);
    CHECK_THROWS_AS(parse(R"({"doc_id":"a","timestamp":"yesterday","tokens":[]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"doc_id":"a","timestamp":0,"tokens":[1]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"doc_id":"a","timestamp":0,"tokens":[]})"
                          "\n"
                          R"({"doc_id":"b","timestamp":"2011-03-08","tokens":[]})"),
                    ParseError);
    CHECK_THROWS_AS(parse(""), DomainError);
    CHECK_THROWS_AS(parse("\n\n"), DomainError);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), Error);
}

TEST_CASE("vocabulary filter boundaries") {
    CHECK_FALSE(retains_x(4));  // fewer than 5 documents
    CHECK(retains_x(5));        // exactly 5 of 10: both boundaries retain
    CHECK_FALSE(retains_x(6));  // more than 50% of 10
}

TEST_CASE("vocabulary ids follow frequency then token order") {
    RawCorpus c;
    c.documents.push_back({"1", 0, {"b", "a", "c"}});
    c.documents.push_back({"2", 0, {"b", "a"}});
    c.documents.push_back({"3", 0, {"b", "d", "d"}});
    const Vocabulary v = build_vocabulary(c, {1, 1.0});
    REQUIRE(v.size() == 4);
    CHECK(v.words() == std::vector<std::string>{"b", "a", "c", "d"});
    CHECK(v.doc_frequency(0) == 3);
    CHECK(v.doc_frequency(3) == 1);
    CHECK(*v.id("c") == 2);
    CHECK_FALSE(v.id("zzz").has_value());
    // Same corpus in another order yields identical ids.
    std::reverse(c.documents.begin(), c.documents.end());
    CHECK(build_vocabulary(c, {1, 1.0}).words() == v.words());
}

TEST_CASE("empty vocabulary after filtering") {
    RawCorpus c;
    c.documents.push_back({"1", 0, {"a"}});
    try {
        build_vocabulary(c);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("min_doc_count") != std::string::npos);
    }
}

TEST_CASE("encoding pools documents and drops unknown tokens") {
    RawCorpus c;
    c.documents.push_back({"1", 1, {"a", "a"}});
    c.documents.push_back({"2", 1, {"b"}});
    c.documents.push_back({"3", 0, {"zzz", "qqq"}});
    c.documents.push_back({"4", 2, {"b", "zzz", "a"}});
    const Vocabulary v({"a", "b"}, {2, 2});
    const Corpus enc = encode_corpus(c, v);
    REQUIRE(enc.num_times() == 3);
    CHECK(enc.bags[0].empty());
    CHECK(enc.bags[1] == std::vector<WordId>{0, 0, 1});
    CHECK(enc.doc_counts == std::vector<std::size_t>{1, 2, 1});
    CHECK(enc.num_tokens() == 5);
    CHECK(enc.word_counts()[1] == std::vector<std::size_t>{2, 1});

    // Token order inside a document has no effect.
    RawCorpus shuffled = c;
    std::reverse(shuffled.documents[0].tokens.begin(), shuffled.documents[0].tokens.end());
    std::reverse(shuffled.documents[3].tokens.begin(), shuffled.documents[3].tokens.end());
    CHECK(encode_corpus(shuffled, v).bags == enc.bags);
}

TEST_CASE("encode then decode reproduces the filtered multiset") {
    RawCorpus c;
    const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps"};
    for (int d = 0; d < 30; ++d) {
        RawDocument doc{"d" + std::to_string(d), static_cast<double>(d), {}};
        for (int i = 0; i < 7; ++i) doc.tokens.push_back(words[(d * 3 + i * i) % 5]);
        doc.tokens.push_back("rare" + std::to_string(d));
        c.documents.push_back(doc);
    }
    const Vocabulary v = build_vocabulary(c, {2, 1.0});
    const Corpus enc = encode_corpus(c, v);
    for (std::size_t d = 0; d < c.documents.size(); ++d) {
        std::vector<std::string> expect;
        for (const auto& t : c.documents[d].tokens)
            if (v.id(t)) expect.push_back(t);
        std::sort(expect.begin(), expect.end());
        std::vector<std::string> got = decode_bag(enc.bags[d], v);
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
    }
}

TEST_CASE("index-equal-interval subsampling") {
    RawCorpus c;
    for (int i = 0; i < 10; ++i) c.documents.push_back({std::to_string(i), static_cast<double>(i), {"a"}});
    const RawCorpus s = subsample_every(c, 3);
    REQUIRE(s.documents.size() == 4);
    CHECK(s.documents[1].doc_id == "3");
    CHECK_THROWS_AS(subsample_every(c, 0), DomainError);
}
