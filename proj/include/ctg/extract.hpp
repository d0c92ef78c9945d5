// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cctype>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctg/corpus.hpp"
#include "ctg/hash.hpp"
#include "ctg/utf8.hpp"

// Sentence segmentation, Introduction/Conclusion extraction and assembly of
// single-sentence citation examples. The segmenter is rule-based, total and
// deterministic; its occasional mistakes are tolerable because the
// multi-citation exclusion re-checks spans per sentence.
namespace ctg::extract {

using json = nlohmann::json;

/// Marker substituted for the raw in-text reference in gold citations.
inline constexpr std::string_view kRefMarker = "#REF";

/// One sentence; [start, end) are character offsets into the paragraph.
struct SentenceSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;
};

/// One training/eval unit: the gold citation sentence from the source paper
/// plus the text fields of both papers.
struct CitationExample {
    std::string example_id;
    std::string source_paper_id;
    std::string cited_paper_id;
    std::string source_abstract;
    std::string target_abstract;
    std::string target_introduction;
    std::string target_conclusion;
    std::string gold_citation;
    std::string section_of_origin;
};

struct UnresolvedRef {
    std::string source_paper_id;
    std::string ref_id;
    std::size_t paragraph_index = 0;
    std::size_t sentence_start = 0;
    std::string reason;
};

// ---------------------------------------------------------------------------
// sentence segmentation

namespace detail {

// Dotted abbreviations that must not end a sentence. Lowercase; matched
// case-insensitively against the text ending at the candidate period, with a
// non-alphanumeric boundary required before the match.
inline constexpr std::array<std::string_view, 14> kAbbreviations = {
    "et al.", "e.g.", "i.e.", "vs.", "cf.", "fig.", "figs.",
    "eq.", "eqs.", "sec.", "tab.", "etc.", "resp.", "approx.",
};

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_upper(char c) {
    return c >= 'A' && c <= 'Z';
}

inline bool is_ascii_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

/// True when the text ending just after byte `dot_byte` (inclusive) matches a
/// guarded abbreviation with a word boundary before it.
inline bool ends_with_abbreviation(std::string_view text, std::size_t dot_byte) {
    const std::size_t end = dot_byte + 1;
    for (std::string_view abbr : kAbbreviations) {
        if (abbr.size() > end) continue;
        const std::size_t begin = end - abbr.size();
        bool match = true;
        for (std::size_t k = 0; k < abbr.size(); ++k) {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[begin + k])));
            if (c != abbr[k]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        if (begin > 0 && is_ascii_alnum(text[begin - 1])) continue;
        return true;
    }
    return false;
}

}  // namespace detail

/// Splits paragraph text into sentences. A `.`, `!` or `?` terminates when
/// followed by whitespace and an ASCII uppercase letter, or by end of text.
/// Periods inside a cite span never terminate, and neither does a period
/// completing a guarded abbreviation. Sentences are non-overlapping, ordered,
/// and jointly cover all non-whitespace text.
inline std::vector<SentenceSpan> segment_sentences(const std::string& text,
                                                   const std::vector<corpus::CiteSpan>& cite_spans = {}) {
    std::vector<SentenceSpan> sentences;
    const std::vector<std::size_t> starts = utf8::char_starts(text);
    const std::size_t n_chars = starts.size() - 1;
    if (n_chars == 0) return sentences;

    auto char_at = [&](std::size_t ci) { return text[starts[ci]]; };
    auto in_cite_span = [&](std::size_t ci) {
        for (const corpus::CiteSpan& s : cite_spans) {
            if (s.start <= ci && ci < s.end) return true;
        }
        return false;
    };

    std::size_t last_non_ws = n_chars;  // one past the last non-whitespace char
    for (std::size_t ci = n_chars; ci > 0; --ci) {
        if (!detail::is_ascii_space(char_at(ci - 1))) {
            last_non_ws = ci;
            break;
        }
        if (ci == 1) last_non_ws = 0;
    }
    if (last_non_ws == 0) return sentences;

    auto emit = [&](std::size_t begin_ci, std::size_t end_ci) {
        SentenceSpan s;
        s.start = begin_ci;
        s.end = end_ci;
        s.text.assign(text, starts[begin_ci], starts[end_ci] - starts[begin_ci]);
        sentences.push_back(std::move(s));
    };

    constexpr std::size_t kNoSentence = static_cast<std::size_t>(-1);
    std::size_t sent_start = kNoSentence;
    for (std::size_t ci = 0; ci < last_non_ws; ++ci) {
        const char c = char_at(ci);
        if (sent_start == kNoSentence) {
            if (detail::is_ascii_space(c)) continue;
            sent_start = ci;
        }
        if (c != '.' && c != '!' && c != '?') continue;
        if (in_cite_span(ci)) continue;

        // Look ahead: end of text, or whitespace then an uppercase letter.
        std::size_t next = ci + 1;
        while (next < last_non_ws && detail::is_ascii_space(char_at(next))) ++next;
        const bool at_end = next >= last_non_ws;
        const bool ws_then_upper = next > ci + 1 && detail::is_ascii_upper(char_at(next));
        if (!at_end && !ws_then_upper) continue;
        if (c == '.' && !at_end && detail::ends_with_abbreviation(text, starts[ci])) continue;

        emit(sent_start, ci + 1);
        sent_start = kNoSentence;
    }
    if (sent_start != kNoSentence) emit(sent_start, last_non_ws);
    return sentences;
}

/// Sentences of the paragraph containing exactly one cite span. A span
/// belongs to a sentence iff its start offset lies within the sentence span.
inline std::vector<std::pair<SentenceSpan, corpus::CiteSpan>> single_citation_sentences(
    const corpus::Paragraph& paragraph) {
    std::vector<std::pair<SentenceSpan, corpus::CiteSpan>> out;
    const auto sentences = segment_sentences(paragraph.text, paragraph.cite_spans);
    for (const SentenceSpan& sentence : sentences) {
        const corpus::CiteSpan* only = nullptr;
        std::size_t count = 0;
        for (const corpus::CiteSpan& span : paragraph.cite_spans) {
            if (span.start >= sentence.start && span.start < sentence.end) {
                only = &span;
                ++count;
            }
        }
        // A span whose surface trails past the sentence end (possible when
        // the span text itself carries trailing whitespace) disqualifies.
        if (count == 1 && only->end <= sentence.end) out.emplace_back(sentence, *only);
    }
    return out;
}

// ---------------------------------------------------------------------------
// section extraction

enum class SectionKind { None, Introduction, Conclusion };

namespace detail {

inline bool is_numbering_token(std::string_view token) {
    if (token.empty()) return false;
    // "1", "1.", "1.2.3", "2)"
    bool any_digit = false;
    bool all_digit_punct = true;
    for (std::size_t i = 0; i < token.size(); ++i) {
        char c = token[i];
        if (c >= '0' && c <= '9') {
            any_digit = true;
        } else if (!(c == '.' || (i + 1 == token.size() && (c == ')' || c == ':')))) {
            all_digit_punct = false;
            break;
        }
    }
    if (any_digit && all_digit_punct) return true;
    // roman numerals require a closing "." / ")" / ":"
    char tail = token.back();
    if (tail != '.' && tail != ')' && tail != ':') return false;
    std::string_view body = token.substr(0, token.size() - 1);
    if (body.empty()) return false;
    for (char c : body) {
        switch (c) {
            case 'i': case 'v': case 'x': case 'l': case 'c': case 'd': case 'm':
                break;
            default:
                return false;
        }
    }
    return true;
}

}  // namespace detail

/// Classifies a section heading after lowercasing and stripping numbering
/// prefixes ("1.", "I.", "1.2"): a heading counts when the remainder equals
/// or starts with "introduction" / "conclusion".
inline SectionKind classify_heading(std::string_view heading) {
    std::string h = corpus::to_lower(corpus::trim(heading));
    std::string_view rest = h;
    for (;;) {
        rest = corpus::trim(rest);
        std::size_t sp = 0;
        while (sp < rest.size() && !detail::is_ascii_space(rest[sp])) ++sp;
        std::string_view token = rest.substr(0, sp);
        if (token.size() < rest.size() && detail::is_numbering_token(token)) {
            rest = rest.substr(sp);
            continue;
        }
        break;
    }
    if (rest.substr(0, 12) == "introduction") return SectionKind::Introduction;
    if (rest.substr(0, 10) == "conclusion") return SectionKind::Conclusion;
    return SectionKind::None;
}

struct Sections {
    std::string introduction;
    std::string conclusion;
};

/// Newline-joined text of all paragraphs under Introduction / Conclusion
/// headings, in body order. Empty string when a paper has no such section.
inline Sections extract_sections(const corpus::PaperRecord& record) {
    Sections out;
    auto append = [](std::string& dst, const std::string& text) {
        if (!dst.empty()) dst.push_back('\n');
        dst += text;
    };
    for (const corpus::Paragraph& para : record.body) {
        switch (classify_heading(para.section)) {
            case SectionKind::Introduction:
                append(out.introduction, para.text);
                break;
            case SectionKind::Conclusion:
                append(out.conclusion, para.text);
                break;
            case SectionKind::None:
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// example assembly

/// Read-only lookup from paper id to a cleaned record, or nullptr when the
/// cited paper is missing from the cleaned corpus.
using Resolver = std::function<const corpus::PaperRecord*(const std::string&)>;

namespace detail {

inline std::string replace_span_with_marker(const std::string& sentence,
                                            std::size_t span_start,
                                            std::size_t span_end) {
    const std::size_t b0 = utf8::byte_offset(sentence, span_start);
    const std::size_t b1 = utf8::byte_offset(sentence, span_end);
    std::string out;
    out.reserve(sentence.size());
    out.append(sentence, 0, b0);
    out.append(kRefMarker);
    out.append(sentence, b1, sentence.size() - b1);
    return out;
}

}  // namespace detail

/// Stable id for one citation sentence: FNV-1a over the source id, cited id
/// and the document-level character offset of the sentence.
inline std::string make_example_id(const std::string& source_paper_id,
                                   const std::string& cited_paper_id,
                                   std::size_t sentence_start_offset) {
    std::string key;
    key.reserve(source_paper_id.size() + cited_paper_id.size() + 24);
    key += source_paper_id;
    key.push_back('\x1f');
    key += cited_paper_id;
    key.push_back('\x1f');
    key += std::to_string(sentence_start_offset);
    return hex16(fnv1a64(key));
}

/// Builds one CitationExample per single-citation sentence whose reference
/// resolves to a cleaned paper. The sentence offset used in the example id is
/// document-level: paragraph lengths plus one separator accumulate.
inline std::vector<CitationExample> build_examples(const corpus::PaperRecord& source,
                                                   const Resolver& resolve,
                                                   std::vector<UnresolvedRef>* unresolved = nullptr) {
    std::vector<CitationExample> out;
    std::size_t doc_offset = 0;
    std::size_t para_index = 0;
    for (const corpus::Paragraph& para : source.body) {
        for (const auto& [sentence, span] : single_citation_sentences(para)) {
            const std::size_t global_start = doc_offset + sentence.start;
            auto skip = [&](const std::string& reason) {
                if (unresolved) {
                    unresolved->push_back(
                        {source.paper_id, span.ref_id, para_index, global_start, reason});
                }
            };
            auto bib = source.bib_entries.find(span.ref_id);
            if (bib == source.bib_entries.end()) {
                skip("ref_id_not_in_bib");
                continue;
            }
            if (!bib->second) {
                skip("bib_entry_unlinked");
                continue;
            }
            const corpus::PaperRecord* cited = resolve(*bib->second);
            if (!cited) {
                skip("cited_paper_not_in_corpus");
                continue;
            }
            const Sections sections = extract_sections(*cited);
            CitationExample ex;
            ex.example_id = make_example_id(source.paper_id, cited->paper_id, global_start);
            ex.source_paper_id = source.paper_id;
            ex.cited_paper_id = cited->paper_id;
            ex.source_abstract = source.abstract.value_or("");
            ex.target_abstract = cited->abstract.value_or("");
            ex.target_introduction = sections.introduction;
            ex.target_conclusion = sections.conclusion;
            ex.gold_citation = detail::replace_span_with_marker(
                sentence.text, span.start - sentence.start, span.end - sentence.start);
            ex.section_of_origin = para.section;
            out.push_back(std::move(ex));
        }
        doc_offset += utf8::length(para.text) + 1;
        ++para_index;
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization

inline json example_to_json(const CitationExample& ex) {
    return json{{"schema_version", 1},
                {"example_id", ex.example_id},
                {"source_paper_id", ex.source_paper_id},
                {"cited_paper_id", ex.cited_paper_id},
                {"source_abstract", ex.source_abstract},
                {"target_abstract", ex.target_abstract},
                {"target_introduction", ex.target_introduction},
                {"target_conclusion", ex.target_conclusion},
                {"gold_citation", ex.gold_citation},
                {"section_of_origin", ex.section_of_origin}};
}

inline CitationExample example_from_json(const json& j) {
    CitationExample ex;
    ex.example_id = j.at("example_id").get<std::string>();
    ex.source_paper_id = j.at("source_paper_id").get<std::string>();
    ex.cited_paper_id = j.at("cited_paper_id").get<std::string>();
    ex.source_abstract = j.at("source_abstract").get<std::string>();
    ex.target_abstract = j.at("target_abstract").get<std::string>();
    ex.target_introduction = j.at("target_introduction").get<std::string>();
    ex.target_conclusion = j.at("target_conclusion").get<std::string>();
    ex.gold_citation = j.at("gold_citation").get<std::string>();
    ex.section_of_origin = j.value("section_of_origin", std::string());
    return ex;
}

}  // namespace ctg::extract
