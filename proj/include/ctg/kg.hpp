// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <functional>
#include <initializer_list>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctg/corpus.hpp"
#include "ctg/errors.hpp"
#include "ctg/extract.hpp"

// Relation triples over scientific text. Two producers share one contract:
// an external extractor speaking the /extract protocol (HTTP or newline
// -delimited messages over standard streams), and a deterministic built-in
// surface-pattern fallback so the pipeline and its tests never need a model.
// Labels come from the SciERC seven-relation inventory.
namespace ctg::kg {

using json = nlohmann::json;

struct ExtractorUnavailable : Error {
    using Error::Error;
};

struct ProtocolError : Error {
    using Error::Error;
};

enum class Relation {
    UsedFor,
    PartOf,
    FeatureOf,
    Compare,
    Conjunction,
    EvaluateFor,
    HyponymOf,
};

inline std::string_view relation_label(Relation r) {
    switch (r) {
        case Relation::UsedFor: return "USED-FOR";
        case Relation::PartOf: return "PART-OF";
        case Relation::FeatureOf: return "FEATURE-OF";
        case Relation::Compare: return "COMPARE";
        case Relation::Conjunction: return "CONJUNCTION";
        case Relation::EvaluateFor: return "EVALUATE-FOR";
        case Relation::HyponymOf: return "HYPONYM-OF";
    }
    return "CONJUNCTION";
}

inline std::optional<Relation> relation_from_label(std::string_view label) {
    const std::string upper = [&] {
        std::string s(label);
        for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return s;
    }();
    if (upper == "USED-FOR") return Relation::UsedFor;
    if (upper == "PART-OF") return Relation::PartOf;
    if (upper == "FEATURE-OF") return Relation::FeatureOf;
    if (upper == "COMPARE") return Relation::Compare;
    if (upper == "CONJUNCTION") return Relation::Conjunction;
    if (upper == "EVALUATE-FOR") return Relation::EvaluateFor;
    if (upper == "HYPONYM-OF") return Relation::HyponymOf;
    return std::nullopt;
}

enum class Origin { External, Heuristic };

struct RelationTriple {
    std::string subject;
    Relation predicate = Relation::Conjunction;
    std::string object;
    Origin origin = Origin::Heuristic;
};

inline constexpr std::size_t kMaxEntityTokens = 12;

/// Ordered, case-insensitively deduplicated triples for one document.
struct TripleSet {
    std::string example_id;
    std::vector<RelationTriple> triples;

    /// Appends unless an equal triple (case-insensitive fields) is present.
    void add(RelationTriple triple) {
        for (const RelationTriple& have : triples) {
            if (have.predicate == triple.predicate &&
                corpus::to_lower(have.subject) == corpus::to_lower(triple.subject) &&
                corpus::to_lower(have.object) == corpus::to_lower(triple.object)) {
                return;
            }
        }
        triples.push_back(std::move(triple));
    }

    void merge(const TripleSet& other) {
        for (const RelationTriple& t : other.triples) add(t);
    }

    bool empty() const { return triples.empty(); }
};

/// One line per triple, exactly "(subject; PREDICATE; object)", input order.
inline std::string serialize_triples(const TripleSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.triples.size(); ++i) {
        const RelationTriple& t = set.triples[i];
        if (i) out.push_back('\n');
        out.push_back('(');
        out += t.subject;
        out += "; ";
        out += relation_label(t.predicate);
        out += "; ";
        out += t.object;
        out.push_back(')');
    }
    return out;
}

// ---------------------------------------------------------------------------
// heuristic extraction

namespace detail {

inline const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",    "an",   "the",  "this",  "that", "these", "those", "our", "their",
        "its",  "his",  "her",  "we",    "it",   "they",  "of",    "in",  "on",
        "at",   "to",   "with", "and",   "or",   "as",    "by",    "is",  "are",
        "was",  "were", "be",   "been",  "for",  "from",  "both",
    };
    return words;
}

struct Token {
    std::string text;    // original surface
    std::string lower;
    bool boundary = false;  // punctuation; chunks never cross these
};

inline std::vector<Token> tokenize_sentence(std::string_view sentence) {
    std::vector<Token> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            Token t;
            t.text = current;
            t.lower = corpus::to_lower(current);
            tokens.push_back(std::move(t));
            current.clear();
        }
    };
    for (unsigned char c : sentence) {
        const bool word_char = std::isalnum(c) || c == '-' || c == '_' || c == '\'' || c >= 0x80;
        if (word_char) {
            current.push_back(static_cast<char>(c));
        } else {
            flush();
            if (!std::isspace(c)) {
                Token t;
                t.text = std::string(1, static_cast<char>(c));
                t.lower = t.text;
                t.boundary = true;
                tokens.push_back(std::move(t));
            }
        }
    }
    flush();
    return tokens;
}

/// Noun-chunk approximation next to a trigger: contiguous word tokens,
/// stopping at punctuation or triggers, capped at 5 non-stopword tokens
/// (and 12 tokens overall). Leading stopwords stay ("our model"); trailing
/// ones are trimmed.
inline std::string chunk_text(const std::vector<Token>& tokens,
                              std::size_t begin,
                              std::size_t end_exclusive,
                              bool extend_left) {
    // collect candidate range without crossing boundaries
    std::vector<std::size_t> picked;
    std::size_t non_stop = 0;
    if (extend_left) {
        for (std::size_t i = end_exclusive; i > begin;) {
            --i;
            const Token& t = tokens[i];
            if (t.boundary) break;
            const bool stop = stopwords().count(t.lower) > 0;
            if (!stop && non_stop == 5) break;
            if (!stop) ++non_stop;
            picked.push_back(i);
            if (picked.size() == kMaxEntityTokens) break;
        }
        std::reverse(picked.begin(), picked.end());
    } else {
        for (std::size_t i = begin; i < end_exclusive; ++i) {
            const Token& t = tokens[i];
            if (t.boundary) break;
            const bool stop = stopwords().count(t.lower) > 0;
            if (!stop && non_stop == 5) break;
            if (!stop) ++non_stop;
            picked.push_back(i);
            if (picked.size() == kMaxEntityTokens) break;
        }
    }
    while (!picked.empty() && stopwords().count(tokens[picked.back()].lower) > 0) {
        picked.pop_back();
    }
    std::string out;
    for (std::size_t i : picked) {
        if (!out.empty()) out.push_back(' ');
        out += tokens[i].text;
    }
    return out;
}

}  // namespace detail

/// Deterministic surface-pattern extraction, applied sentence by sentence:
///   X is used for Y / we use X for Y      -> (X, USED-FOR, Y)
///   X is part of Y / Y consists of X      -> (X, PART-OF, Y)
///   X outperforms Y / X compared with Y   -> (X, COMPARE, Y)
///   X such as Y                           -> (Y, HYPONYM-OF, X)
///   X is evaluated on Y                   -> (X, EVALUATE-FOR, Y)
/// Entities are noun chunks of at most 5 non-stopword tokens adjacent to the
/// trigger. Makes no fidelity claim to any neural extractor.
inline TripleSet extract_heuristic(const std::string& text) {
    TripleSet set;
    for (const extract::SentenceSpan& sentence : extract::segment_sentences(text)) {
        const auto tokens = detail::tokenize_sentence(sentence.text);

        auto match_at = [&](std::size_t pos, std::initializer_list<std::string_view> words) {
            std::size_t i = pos;
            for (std::string_view w : words) {
                if (i >= tokens.size() || tokens[i].boundary || tokens[i].lower != w) return false;
                ++i;
            }
            return true;
        };

        auto emit = [&](std::string subject, Relation rel, std::string object) {
            if (subject.empty() || object.empty()) return;
            RelationTriple t;
            t.subject = std::move(subject);
            t.predicate = rel;
            t.object = std::move(object);
            t.origin = Origin::Heuristic;
            set.add(std::move(t));
        };

        auto left_of = [&](std::size_t pos) { return detail::chunk_text(tokens, 0, pos, true); };
        auto right_of = [&](std::size_t pos) {
            return detail::chunk_text(tokens, pos, tokens.size(), false);
        };

        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (match_at(i, {"is", "used", "for"})) {
                emit(left_of(i), Relation::UsedFor, right_of(i + 3));
            } else if (match_at(i, {"we", "use"})) {
                // we use X for Y
                for (std::size_t k = i + 2; k < tokens.size() && !tokens[k].boundary; ++k) {
                    if (tokens[k].lower == "for") {
                        emit(detail::chunk_text(tokens, i + 2, k, true), Relation::UsedFor,
                             right_of(k + 1));
                        break;
                    }
                }
            } else if (match_at(i, {"is", "part", "of"})) {
                emit(left_of(i), Relation::PartOf, right_of(i + 3));
            } else if (match_at(i, {"consists", "of"})) {
                emit(right_of(i + 2), Relation::PartOf, left_of(i));
            } else if (match_at(i, {"outperforms"})) {
                emit(left_of(i), Relation::Compare, right_of(i + 1));
            } else if (match_at(i, {"compared", "with"})) {
                emit(left_of(i), Relation::Compare, right_of(i + 2));
            } else if (match_at(i, {"such", "as"})) {
                emit(right_of(i + 2), Relation::HyponymOf, left_of(i));
            } else if (match_at(i, {"is", "evaluated", "on"})) {
                emit(left_of(i), Relation::EvaluateFor, right_of(i + 3));
            }
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// external extractor protocol

/// Sends one request body, returns the raw response body. Implementations:
/// HTTP POST /extract, a newline-delimited exchange over a stream pair, or
/// any test double. Transient failures throw ExtractorUnavailable.
using Transport = std::function<std::string(const std::string& request_body)>;

struct ExtractorConfig {
    int max_retries = 3;             // attempts per request
    int retry_delay_ms = 200;        // doubled per retry
    std::size_t max_in_flight = 4;   // concurrent requests
    std::size_t docs_per_request = 16;
    std::function<void(const std::string&)> warn;  // optional warning sink
};

inline json build_extract_request(
    const std::vector<std::pair<std::string, std::string>>& docs) {
    json documents = json::array();
    for (const auto& [doc_id, text] : docs) {
        documents.push_back({{"doc_id", doc_id}, {"text", text}});
    }
    return json{{"documents", documents}};
}

namespace detail {

inline void warn_to(const ExtractorConfig& config, const std::string& message) {
    if (config.warn) config.warn(message);
}

inline std::size_t token_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_word = false;
        } else if (!in_word) {
            ++n;
            in_word = true;
        }
    }
    return n;
}

}  // namespace detail

/// Parses one protocol response covering `expected` doc ids (in order).
/// Unknown labels map to CONJUNCTION with a warning; empty or oversized
/// entities are dropped with a warning. Throws ProtocolError on anything
/// that does not match the wire schema.
inline std::vector<TripleSet> parse_extract_response(
    const std::string& body,
    const std::vector<std::string>& expected,
    const ExtractorConfig& config) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& ex) {
        throw ProtocolError(std::string("extractor response is not JSON: ") + ex.what());
    }
    if (!j.is_object() || !j.contains("results") || !j.at("results").is_array()) {
        throw ProtocolError("extractor response lacks a results array");
    }
    std::map<std::string, TripleSet> by_id;
    try {
        for (const auto& result : j.at("results")) {
            TripleSet set;
            set.example_id = result.at("doc_id").get<std::string>();
            for (const auto& rel : result.value("relations", json::array())) {
                RelationTriple t;
                t.subject = rel.at("subject").get<std::string>();
                t.object = rel.at("object").get<std::string>();
                t.origin = Origin::External;
                const std::string label = rel.at("label").get<std::string>();
                if (auto parsed = relation_from_label(label)) {
                    t.predicate = *parsed;
                } else {
                    t.predicate = Relation::Conjunction;
                    detail::warn_to(config, "unknown relation label '" + label +
                                                "' mapped to CONJUNCTION (doc " +
                                                set.example_id + ")");
                }
                if (corpus::is_blank(t.subject) || corpus::is_blank(t.object) ||
                    detail::token_count(t.subject) > kMaxEntityTokens ||
                    detail::token_count(t.object) > kMaxEntityTokens) {
                    detail::warn_to(config, "dropped invalid entity pair in doc " +
                                                set.example_id);
                    continue;
                }
                set.add(std::move(t));
            }
            if (!by_id.emplace(set.example_id, std::move(set)).second) {
                throw ProtocolError("duplicate doc_id in extractor response");
            }
        }
    } catch (const json::exception& ex) {
        throw ProtocolError(std::string("extractor response schema violation: ") + ex.what());
    }
    std::vector<TripleSet> out;
    out.reserve(expected.size());
    for (const std::string& id : expected) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ProtocolError("extractor response missing doc_id " + id);
        }
        out.push_back(std::move(it->second));
    }
    return out;
}

/// One TripleSet per input document, in input order. Documents are chunked
/// into requests; up to max_in_flight requests run concurrently; each request
/// retries transient transport failures with doubling delay before giving up
/// with ExtractorUnavailable.
inline std::vector<TripleSet> extract_external(
    const std::vector<std::pair<std::string, std::string>>& docs,
    const Transport& transport,
    const ExtractorConfig& config = {}) {
    std::vector<TripleSet> out(docs.size());
    if (docs.empty()) return out;

    struct Chunk {
        std::size_t begin, end;
    };
    std::vector<Chunk> chunks;
    const std::size_t step = config.docs_per_request ? config.docs_per_request : 1;
    for (std::size_t b = 0; b < docs.size(); b += step) {
        chunks.push_back({b, std::min(b + step, docs.size())});
    }

    auto run_chunk = [&](const Chunk& chunk) {
        std::vector<std::pair<std::string, std::string>> slice(docs.begin() + chunk.begin,
                                                               docs.begin() + chunk.end);
        std::vector<std::string> expected;
        for (const auto& [id, text] : slice) expected.push_back(id);
        const std::string request = build_extract_request(slice).dump();

        std::string body;
        int delay_ms = config.retry_delay_ms;
        for (int attempt = 1;; ++attempt) {
            try {
                body = transport(request);
                break;
            } catch (const ExtractorUnavailable&) {
                if (attempt >= config.max_retries) throw;
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
        }
        auto sets = parse_extract_response(body, expected, config);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            out[chunk.begin + i] = std::move(sets[i]);
        }
    };

    const std::size_t workers =
        std::max<std::size_t>(1, std::min(config.max_in_flight, chunks.size()));
    if (workers == 1) {
        for (const Chunk& chunk : chunks) run_chunk(chunk);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= chunks.size()) return;
                try {
                    run_chunk(chunks[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

/// HTTP flavor of the protocol: POST /extract against an extractor base URL.
/// Connection failures and 5xx responses are transient; anything else that
/// is not a 200 is a protocol error.
inline Transport http_transport(const std::string& endpoint, int timeout_sec = 30) {
    return [endpoint, timeout_sec](const std::string& request) {
        httplib::Client client(endpoint);
        client.set_connection_timeout(timeout_sec, 0);
        client.set_read_timeout(timeout_sec, 0);
        auto res = client.Post("/extract", request, "application/json");
        if (!res) {
            throw ExtractorUnavailable("no response from " + endpoint + ": " +
                                       httplib::to_string(res.error()));
        }
        if (res->status >= 500) {
            throw ExtractorUnavailable("extractor returned HTTP " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw ProtocolError("extractor returned HTTP " + std::to_string(res->status));
        }
        return res->body;
    };
}

/// The newline-delimited stream flavor of the protocol: writes the request
/// as one line, reads one line back. Used for subprocess adapters.
inline Transport stream_transport(std::istream& in, std::ostream& outstream) {
    return [&in, &outstream](const std::string& request) {
        outstream << request << '\n';
        outstream.flush();
        if (!outstream) throw ExtractorUnavailable("extractor stream closed on write");
        std::string line;
        if (!std::getline(in, line)) {
            throw ExtractorUnavailable("extractor stream closed on read");
        }
        return line;
    };
}

// ---------------------------------------------------------------------------
// serialization of triple stage files

inline json tripleset_to_json(const TripleSet& set) {
    json triples = json::array();
    for (const RelationTriple& t : set.triples) {
        triples.push_back({{"subject", t.subject},
                           {"predicate", std::string(relation_label(t.predicate))},
                           {"object", t.object},
                           {"origin", t.origin == Origin::External ? "external" : "heuristic"}});
    }
    return json{{"schema_version", 1}, {"example_id", set.example_id}, {"triples", triples}};
}

inline TripleSet tripleset_from_json(const json& j) {
    TripleSet set;
    set.example_id = j.at("example_id").get<std::string>();
    for (const auto& tj : j.at("triples")) {
        RelationTriple t;
        t.subject = tj.at("subject").get<std::string>();
        t.object = tj.at("object").get<std::string>();
        auto rel = relation_from_label(tj.at("predicate").get<std::string>());
        if (!rel) throw ProtocolError("triple file carries unknown predicate");
        t.predicate = *rel;
        t.origin = tj.value("origin", std::string("heuristic")) == "external" ? Origin::External
                                                                              : Origin::Heuristic;
        set.add(std::move(t));
    }
    return set;
}

}  // namespace ctg::kg
