// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#include "ctg/extract.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "ctg/hash.hpp"

using namespace ctg;
using corpus::CiteSpan;
using corpus::Paragraph;
using corpus::PaperRecord;

namespace {

Paragraph make_paragraph(std::string section, std::string text,
                         std::vector<std::pair<std::string, std::string>> markers) {
    Paragraph p;
    p.section = std::move(section);
    p.text = std::move(text);
    for (const auto& [marker, ref] : markers) {
        std::size_t at = p.text.find(marker);
        EXPECT_NE(at, std::string::npos);
        CiteSpan span;
        span.start = at;  // fixture text is ASCII, byte == char offsets
        span.end = at + marker.size();
        span.ref_id = ref;
        span.surface = marker;
        p.cite_spans.push_back(span);
    }
    std::sort(p.cite_spans.begin(), p.cite_spans.end(),
              [](const CiteSpan& a, const CiteSpan& b) { return a.start < b.start; });
    return p;
}

}  // namespace

TEST(SegmentSentences, BasicSplit) {
    auto sentences = extract::segment_sentences("We follow [1]. It works.");
    ASSERT_EQ(sentences.size(), 2u);
    EXPECT_EQ(sentences[0].text, "We follow [1].");
    EXPECT_EQ(sentences[1].text, "It works.");
    EXPECT_EQ(sentences[0].start, 0u);
    EXPECT_EQ(sentences[0].end, 14u);
    EXPECT_EQ(sentences[1].start, 15u);
}

TEST(SegmentSentences, AbbreviationGuard) {
    auto sentences = extract::segment_sentences("See et al. [2] for details.");
    ASSERT_EQ(sentences.size(), 1u);

    // guard also holds when an uppercase word follows the abbreviation
    auto guarded = extract::segment_sentences("Analyzed by Lee et al. Following them we act.");
    ASSERT_EQ(guarded.size(), 1u);

    // "...metal." must not trip the "al." style guards: full-entry matching
    auto not_guarded = extract::segment_sentences("It is metal. Gold conducts.");
    EXPECT_EQ(not_guarded.size(), 2u);

    auto fig = extract::segment_sentences("As in Fig. The caption explains it.");
    EXPECT_EQ(fig.size(), 1u);
}

TEST(SegmentSentences, EmptyAndDegenerateInputs) {
    EXPECT_TRUE(extract::segment_sentences("").empty());
    EXPECT_TRUE(extract::segment_sentences("   \t \n").empty());
    auto one = extract::segment_sentences("no terminator at all");
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].text, "no terminator at all");
}

TEST(SegmentSentences, QuestionAndBangTerminate) {
    auto s = extract::segment_sentences("Why not? Because. Done!");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].text, "Why not?");
    EXPECT_EQ(s[2].text, "Done!");
}

TEST(SegmentSentences, LowercaseContinuationDoesNotSplit) {
    auto s = extract::segment_sentences("Version 2. of the tool is out. It rocks.");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].text, "Version 2. of the tool is out.");
}

TEST(SegmentSentences, PeriodInsideCiteSpanNeverTerminates) {
    // span covers "[Smith. 2020]" including the internal period
    std::string text = "We reuse [Smith. 2020] and more. Next sentence.";
    std::vector<CiteSpan> spans;
    CiteSpan span;
    span.start = 9;
    span.end = 22;
    span.ref_id = "s";
    span.surface = "[Smith. 2020]";
    spans.push_back(span);
    auto with_guard = extract::segment_sentences(text, spans);
    ASSERT_EQ(with_guard.size(), 2u);
    EXPECT_EQ(with_guard[0].text, "We reuse [Smith. 2020] and more.");

    // without the span the period would split (". 2020" -> no, lowercase digit)
    // make a variant where it clearly would:
    std::string text2 = "See [A. B] here. Done.";
    std::vector<CiteSpan> spans2;
    CiteSpan span2;
    span2.start = 4;
    span2.end = 10;
    span2.ref_id = "s";
    span2.surface = "[A. B]";
    spans2.push_back(span2);
    EXPECT_EQ(extract::segment_sentences(text2, spans2).size(), 2u);
    EXPECT_EQ(extract::segment_sentences(text2).size(), 3u);
}

TEST(SegmentSentences, DeterministicAndCoversNonWhitespace) {
    const std::string text = "One two. Three four! Five six? Seven.";
    auto a = extract::segment_sentences(text);
    auto b = extract::segment_sentences(text);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].start, b[i].start);
        EXPECT_EQ(a[i].end, b[i].end);
    }
    // joint coverage of non-whitespace characters, no overlap
    std::size_t covered_until = 0;
    for (const auto& s : a) {
        EXPECT_GE(s.start, covered_until);
        for (std::size_t c = covered_until; c < s.start; ++c) {
            EXPECT_TRUE(std::isspace(static_cast<unsigned char>(text[c])));
        }
        covered_until = s.end;
    }
    for (std::size_t c = covered_until; c < text.size(); ++c) {
        EXPECT_TRUE(std::isspace(static_cast<unsigned char>(text[c])));
    }
}

TEST(SingleCitationSentences, MultiCitationSentencesExcluded) {
    Paragraph p = make_paragraph(
        "Intro",
        "We combine [1] and [2] here. Only [3] appears in this one. None here.",
        {{"[1]", "a"}, {"[2]", "b"}, {"[3]", "c"}});
    auto singles = extract::single_citation_sentences(p);
    ASSERT_EQ(singles.size(), 1u);
    EXPECT_EQ(singles[0].second.ref_id, "c");
    EXPECT_EQ(singles[0].first.text, "Only [3] appears in this one.");
}

TEST(SingleCitationSentences, ZeroSpansGiveEmptyList) {
    Paragraph p = make_paragraph("Intro", "Nothing cited here. At all.", {});
    EXPECT_TRUE(extract::single_citation_sentences(p).empty());
}

TEST(ClassifyHeading, NumberingAndPrefixes) {
    using extract::SectionKind;
    EXPECT_EQ(extract::classify_heading("1. Introduction"), SectionKind::Introduction);
    EXPECT_EQ(extract::classify_heading("I. Introduction"), SectionKind::Introduction);
    EXPECT_EQ(extract::classify_heading("INTRODUCTION AND MOTIVATION"),
              SectionKind::Introduction);
    EXPECT_EQ(extract::classify_heading("introduction"), SectionKind::Introduction);
    EXPECT_EQ(extract::classify_heading("5 Conclusion"), SectionKind::Conclusion);
    EXPECT_EQ(extract::classify_heading("Conclusions"), SectionKind::Conclusion);
    EXPECT_EQ(extract::classify_heading("Conclusion and Future Work"), SectionKind::Conclusion);
    EXPECT_EQ(extract::classify_heading("1.2 Results"), SectionKind::None);
    EXPECT_EQ(extract::classify_heading("Method"), SectionKind::None);
    EXPECT_EQ(extract::classify_heading("Introductory Remarks"), SectionKind::None);
    EXPECT_EQ(extract::classify_heading(""), SectionKind::None);
}

TEST(ExtractSections, JoinsMatchingParagraphsInOrder) {
    PaperRecord rec;
    rec.paper_id = "p";
    rec.body.push_back({"1. Introduction", "First intro para.", {}});
    rec.body.push_back({"Method", "Not this.", {}});
    rec.body.push_back({"1. Introduction", "Second intro para.", {}});
    rec.body.push_back({"Conclusions", "Wrap up.", {}});
    auto sections = extract::extract_sections(rec);
    EXPECT_EQ(sections.introduction, "First intro para.\nSecond intro para.");
    EXPECT_EQ(sections.conclusion, "Wrap up.");

    PaperRecord none;
    none.paper_id = "q";
    none.body.push_back({"Method", "Text.", {}});
    auto empty = extract::extract_sections(none);
    EXPECT_TRUE(empty.introduction.empty());
    EXPECT_TRUE(empty.conclusion.empty());
}

namespace {

/// Two-paper world for build_examples tests.
struct World {
    PaperRecord source;
    PaperRecord cited;
    std::map<std::string, PaperRecord*> by_id;

    extract::Resolver resolver() {
        return [this](const std::string& id) -> const PaperRecord* {
            auto it = by_id.find(id);
            return it == by_id.end() ? nullptr : it->second;
        };
    }
};

World make_world() {
    World w;
    w.source.paper_id = "src";
    w.source.abstract = "Source abstract text.";
    w.source.bib_entries["b1"] = std::string("dst");
    w.source.bib_entries["b2"] = std::nullopt;
    w.source.body.push_back(make_paragraph(
        "Intro", "X improves Y [3]. A missing ref [9] sits here. Unlinked one [8] too.",
        {{"[3]", "b1"}, {"[9]", "b9"}, {"[8]", "b2"}}));
    w.cited.paper_id = "dst";
    w.cited.abstract = "Cited abstract text.";
    w.cited.body.push_back({"Introduction", "Cited intro.", {}});
    w.cited.body.push_back({"Conclusion", "Cited conclusion.", {}});
    w.by_id["src"] = &w.source;
    w.by_id["dst"] = &w.cited;
    return w;
}

}  // namespace

TEST(BuildExamples, MarkerReplacementAndTargetFields) {
    World w = make_world();
    std::vector<extract::UnresolvedRef> unresolved;
    auto examples = extract::build_examples(w.source, w.resolver(), &unresolved);
    ASSERT_EQ(examples.size(), 1u);
    const auto& ex = examples[0];
    EXPECT_EQ(ex.gold_citation, "X improves Y #REF.");
    EXPECT_EQ(ex.source_paper_id, "src");
    EXPECT_EQ(ex.cited_paper_id, "dst");
    EXPECT_EQ(ex.source_abstract, "Source abstract text.");
    EXPECT_EQ(ex.target_abstract, "Cited abstract text.");
    EXPECT_EQ(ex.target_introduction, "Cited intro.");
    EXPECT_EQ(ex.target_conclusion, "Cited conclusion.");
    EXPECT_EQ(ex.section_of_origin, "Intro");
    EXPECT_EQ(ex.example_id, extract::make_example_id("src", "dst", 0));

    ASSERT_EQ(unresolved.size(), 2u);
    EXPECT_EQ(unresolved[0].reason, "ref_id_not_in_bib");
    EXPECT_EQ(unresolved[1].reason, "bib_entry_unlinked");
}

TEST(BuildExamples, TwoQualifyingSentencesGiveTwoExamples) {
    World w = make_world();
    w.source.body.clear();
    w.source.body.push_back(make_paragraph(
        "S", "First cite [3] works fine. Second cite [3] also does.", {{"[3]", "b1"}}));
    // the helper only marks the first occurrence; add the second by hand
    CiteSpan second;
    second.start = w.source.body[0].text.find("[3]", 12);
    second.end = second.start + 3;
    second.ref_id = "b1";
    second.surface = "[3]";
    w.source.body[0].cite_spans.push_back(second);

    auto examples = extract::build_examples(w.source, w.resolver());
    ASSERT_EQ(examples.size(), 2u);
    EXPECT_EQ(examples[0].gold_citation, "First cite #REF works fine.");
    EXPECT_EQ(examples[1].gold_citation, "Second cite #REF also does.");
    EXPECT_NE(examples[0].example_id, examples[1].example_id);
}

TEST(BuildExamples, NoEmittedGoldContainsTwoMarkers) {
    // fuzz paragraphs with 0-3 citations per sentence and check exclusion
    SplitMix64 rng(99);
    World w = make_world();
    for (int trial = 0; trial < 200; ++trial) {
        Paragraph p;
        p.section = "S";
        std::string text;
        int marker_no = 0;
        for (int s = 0; s < 3; ++s) {
            std::string sentence = "Alpha beta";
            const int cites = static_cast<int>(rng.next() % 3);
            for (int c = 0; c < cites; ++c) {
                std::string marker = "[m" + std::to_string(marker_no++) + "]";
                CiteSpan span;
                span.start = text.size() + sentence.size() + 1;
                sentence += " " + marker;
                span.end = text.size() + sentence.size();
                span.ref_id = "b1";
                span.surface = marker;
                p.cite_spans.push_back(span);
            }
            sentence += " gamma. ";
            text += sentence;
        }
        p.text = text;
        // spans were appended in order; fix absolute offsets computed above
        w.source.body.clear();
        w.source.body.push_back(p);
        auto examples = extract::build_examples(w.source, w.resolver());
        for (const auto& ex : examples) {
            std::size_t first = ex.gold_citation.find("#REF");
            ASSERT_NE(first, std::string::npos);
            EXPECT_EQ(ex.gold_citation.find("#REF", first + 1), std::string::npos)
                << ex.gold_citation;
        }
    }
}

TEST(BuildExamples, ExampleIdIsStable) {
    EXPECT_EQ(extract::make_example_id("a", "b", 7), extract::make_example_id("a", "b", 7));
    EXPECT_NE(extract::make_example_id("a", "b", 7), extract::make_example_id("a", "b", 8));
    EXPECT_NE(extract::make_example_id("a", "b", 7), extract::make_example_id("b", "a", 7));
    // frozen value: FNV-1a of "a\x1fb\x1f7"
    EXPECT_EQ(extract::make_example_id("a", "b", 7).size(), 16u);
}
