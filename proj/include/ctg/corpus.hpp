// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctg/errors.hpp"
#include "ctg/utf8.hpp"

// Parsing, validation and cleaning of S2ORC-style paper records, one JSON
// object per input line. Offsets in cite spans are Unicode scalar offsets
// into the owning paragraph. Records that violate span invariants are
// rejected with a logged reason, never repaired: a silently shifted span
// would corrupt the gold citation sentences extracted downstream.
namespace ctg::corpus {

using json = nlohmann::json;

struct MalformedRecord : Error {
    using Error::Error;
};

struct SpanOutOfBounds : Error {
    using Error::Error;
};

struct DuplicateId : Error {
    using Error::Error;
};

/// One in-text reference. [start, end) are character offsets into the
/// paragraph text; surface is the quoted span text.
struct CiteSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string ref_id;
    std::string surface;
};

struct Paragraph {
    std::string section;
    std::string text;
    std::vector<CiteSpan> cite_spans;  // sorted by start, non-overlapping
};

struct PaperRecord {
    std::string paper_id;
    std::string title;
    std::optional<std::string> abstract;  // absent until cleaning guarantees it
    std::vector<std::string> fields_of_study;
    std::vector<Paragraph> body;
    std::map<std::string, std::optional<std::string>> bib_entries;  // ref key -> cited paper id
};

// ---------------------------------------------------------------------------
// small text helpers shared by several modules

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool is_blank(std::string_view s) {
    return trim(s).empty();
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Lowercased, trimmed, inner whitespace runs collapsed to single spaces.
inline std::string normalize_tag(std::string_view s) {
    std::string out;
    bool in_space = true;
    for (char ch : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void validate_spans(Paragraph& para, std::size_t para_index) {
    std::stable_sort(para.cite_spans.begin(), para.cite_spans.end(),
                     [](const CiteSpan& a, const CiteSpan& b) { return a.start < b.start; });
    const std::size_t text_len = utf8::length(para.text);
    const CiteSpan* prev = nullptr;
    for (const CiteSpan& span : para.cite_spans) {
        if (span.start >= span.end || span.end > text_len) {
            throw SpanOutOfBounds("paragraph " + std::to_string(para_index) + ": cite span [" +
                                  std::to_string(span.start) + ", " + std::to_string(span.end) +
                                  ") outside text of length " + std::to_string(text_len));
        }
        if (utf8::substr(para.text, span.start, span.end) != span.surface) {
            throw MalformedRecord("paragraph " + std::to_string(para_index) +
                                  ": cite span surface does not match text at [" +
                                  std::to_string(span.start) + ", " + std::to_string(span.end) + ")");
        }
        if (prev && span.start < prev->end) {
            throw MalformedRecord("paragraph " + std::to_string(para_index) +
                                  ": overlapping cite spans");
        }
        prev = &span;
    }
}

}  // namespace detail

/// Parses one input line into a PaperRecord, verifying every CiteSpan
/// invariant. Throws MalformedRecord or SpanOutOfBounds.
inline PaperRecord parse_record(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& ex) {
        throw MalformedRecord(std::string("bad JSON: ") + ex.what());
    }
    if (!j.is_object()) throw MalformedRecord("record is not a JSON object");

    PaperRecord rec;
    try {
        rec.paper_id = j.at("paper_id").get<std::string>();
        if (rec.paper_id.empty()) throw MalformedRecord("empty paper_id");
        rec.title = j.value("title", std::string());
        if (j.contains("abstract") && !j.at("abstract").is_null()) {
            rec.abstract = j.at("abstract").get<std::string>();
        }
        if (j.contains("fields_of_study") && !j.at("fields_of_study").is_null()) {
            for (const auto& f : j.at("fields_of_study")) {
                rec.fields_of_study.push_back(f.get<std::string>());
            }
        }
        if (j.contains("body_text") && !j.at("body_text").is_null()) {
            std::size_t para_index = 0;
            for (const auto& pj : j.at("body_text")) {
                Paragraph para;
                para.section = pj.value("section", std::string());
                para.text = pj.at("text").get<std::string>();
                if (pj.contains("cite_spans") && !pj.at("cite_spans").is_null()) {
                    for (const auto& sj : pj.at("cite_spans")) {
                        CiteSpan span;
                        long long start = sj.at("start").get<long long>();
                        long long end = sj.at("end").get<long long>();
                        if (start < 0 || end < 0) {
                            throw SpanOutOfBounds("paragraph " + std::to_string(para_index) +
                                                  ": negative cite span offset");
                        }
                        span.start = static_cast<std::size_t>(start);
                        span.end = static_cast<std::size_t>(end);
                        span.ref_id = sj.at("ref_id").get<std::string>();
                        span.surface = sj.at("text").get<std::string>();
                        para.cite_spans.push_back(std::move(span));
                    }
                }
                detail::validate_spans(para, para_index);
                rec.body.push_back(std::move(para));
                ++para_index;
            }
        }
        if (j.contains("bib_entries") && !j.at("bib_entries").is_null()) {
            for (const auto& [key, entry] : j.at("bib_entries").items()) {
                std::optional<std::string> cited;
                if (entry.is_object() && entry.contains("paper_id") && !entry.at("paper_id").is_null()) {
                    cited = entry.at("paper_id").get<std::string>();
                }
                rec.bib_entries.emplace(key, std::move(cited));
            }
        }
    } catch (const json::exception& ex) {
        throw MalformedRecord(std::string("schema violation: ") + ex.what());
    }
    return rec;
}

/// Inverse of parse_record; parse -> serialize -> parse is a fixed point.
inline json serialize_record(const PaperRecord& rec) {
    json j;
    j["paper_id"] = rec.paper_id;
    j["title"] = rec.title;
    if (rec.abstract) {
        j["abstract"] = *rec.abstract;
    } else {
        j["abstract"] = nullptr;
    }
    j["fields_of_study"] = rec.fields_of_study;
    json body = json::array();
    for (const Paragraph& para : rec.body) {
        json pj;
        pj["section"] = para.section;
        pj["text"] = para.text;
        json spans = json::array();
        for (const CiteSpan& span : para.cite_spans) {
            spans.push_back({{"start", span.start},
                             {"end", span.end},
                             {"ref_id", span.ref_id},
                             {"text", span.surface}});
        }
        pj["cite_spans"] = std::move(spans);
        body.push_back(std::move(pj));
    }
    j["body_text"] = std::move(body);
    json bib = json::object();
    for (const auto& [key, cited] : rec.bib_entries) {
        bib[key] = {{"paper_id", cited ? json(*cited) : json(nullptr)}};
    }
    j["bib_entries"] = std::move(bib);
    return j;
}

/// Exact-tag match, case-insensitive and whitespace-normalized. Deliberately
/// not a substring match: "Computer Science Education" must not count.
inline bool has_field_of_study(const PaperRecord& rec, std::string_view tag) {
    const std::string wanted = normalize_tag(tag);
    for (const std::string& field : rec.fields_of_study) {
        if (normalize_tag(field) == wanted) return true;
    }
    return false;
}

/// Rejection counts by reason. Workers keep their own log and merge at the
/// end; merge is associative so the result is thread-count independent.
struct RejectionLog {
    std::map<std::string, std::uint64_t> counts;

    void add(const std::string& reason) { ++counts[reason]; }

    void merge(const RejectionLog& other) {
        for (const auto& [reason, n] : other.counts) counts[reason] += n;
    }

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [reason, count] : counts) n += count;
        return n;
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [reason, n] : counts) j[reason] = n;
        return j;
    }
};

/// Reason a record fails cleaning, or nullopt if it passes. A record passes
/// with a non-blank abstract and at least one paragraph of non-blank text.
inline std::optional<std::string> clean_rejection_reason(const PaperRecord& rec) {
    if (!rec.abstract || is_blank(*rec.abstract)) return "empty_abstract";
    bool has_text = false;
    for (const Paragraph& para : rec.body) {
        if (!is_blank(para.text)) {
            has_text = true;
            break;
        }
    }
    if (!has_text) return "empty_body";
    return std::nullopt;
}

/// Drops records with empty abstracts or bodies. Output count plus rejection
/// count always equals input count.
inline std::pair<std::vector<PaperRecord>, RejectionLog> clean_corpus(std::vector<PaperRecord> records) {
    std::vector<PaperRecord> kept;
    kept.reserve(records.size());
    RejectionLog log;
    for (auto& rec : records) {
        if (auto reason = clean_rejection_reason(rec)) {
            log.add(*reason);
        } else {
            kept.push_back(std::move(rec));
        }
    }
    return {std::move(kept), std::move(log)};
}

/// Immutable id -> record index, built once and safe for concurrent lookup.
class CorpusIndex {
  public:
    /// Returns false (and leaves the index unchanged) on a duplicate id.
    bool add(PaperRecord rec) {
        auto [it, inserted] = by_id_.emplace(rec.paper_id, std::move(rec));
        (void)it;
        return inserted;
    }

    const PaperRecord* find(const std::string& paper_id) const {
        auto it = by_id_.find(paper_id);
        return it == by_id_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return by_id_.size(); }

  private:
    std::unordered_map<std::string, PaperRecord> by_id_;
};

}  // namespace ctg::corpus
