// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctg/errors.hpp"
#include "ctg/extract.hpp"
#include "ctg/hash.hpp"
#include "ctg/metrics.hpp"
#include "ctg/utf8.hpp"

// Corpus statistics, deterministic example-level splitting, and relative
// score deltas between evaluation runs. Splitting is by example, not by
// paper; papers therefore appear across splits, which matches the dataset
// protocol this pipeline reproduces but does leak paper text between splits.
namespace ctg::report {

using json = nlohmann::json;

struct BadRatios : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// corpus statistics

/// Character statistics for one text field. Totals are kept in integers so
/// that avg * n equals the total exactly before any display rounding.
struct FieldStats {
    std::uint64_t total_chars = 0;
    std::uint64_t max_chars = 0;

    void add(std::string_view text) {
        const std::uint64_t n = utf8::length(text);
        total_chars += n;
        if (n > max_chars) max_chars = n;
    }

    double avg(std::size_t n) const {
        return n == 0 ? 0.0 : static_cast<double>(total_chars) / static_cast<double>(n);
    }
};

struct CorpusStats {
    std::size_t n_citations = 0;
    std::size_t n_unique_papers = 0;
    FieldStats citations;
    FieldStats source_abstracts;
    FieldStats target_abstracts;
};

inline CorpusStats corpus_stats(std::span<const extract::CitationExample> examples) {
    if (examples.empty()) throw EmptyInput("corpus_stats: no examples");
    CorpusStats stats;
    stats.n_citations = examples.size();
    std::set<std::string> papers;
    for (const auto& ex : examples) {
        papers.insert(ex.source_paper_id);
        papers.insert(ex.cited_paper_id);
        stats.citations.add(ex.gold_citation);
        stats.source_abstracts.add(ex.source_abstract);
        stats.target_abstracts.add(ex.target_abstract);
    }
    stats.n_unique_papers = papers.size();
    return stats;
}

inline double round2(double v) {
    return std::round(v * 100.0) / 100.0;
}

inline json stats_to_json(const CorpusStats& s) {
    auto field = [&](const FieldStats& f) {
        return json{{"avg_chars", round2(f.avg(s.n_citations))},
                    {"max_chars", f.max_chars},
                    {"total_chars", f.total_chars}};
    };
    return json{{"schema_version", 1},
                {"n_citations", s.n_citations},
                {"n_unique_papers", s.n_unique_papers},
                {"citations", field(s.citations)},
                {"source_abstracts", field(s.source_abstracts)},
                {"target_abstracts", field(s.target_abstracts)}};
}

// ---------------------------------------------------------------------------
// deterministic splitting

inline constexpr const char* kSplitNames[3] = {"train", "validation", "test"};

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

/// Total, disjoint assignment of example ids to train/validation/test, kept
/// in input order for stable files.
struct SplitAssignment {
    std::uint64_t seed = 0;
    SplitRatios ratios;
    std::vector<std::pair<std::string, std::string>> labels;  // id -> split name

    std::map<std::string, std::string> as_map() const {
        return {labels.begin(), labels.end()};
    }

    std::map<std::string, std::size_t> counts() const {
        std::map<std::string, std::size_t> out;
        for (const auto& [id, split] : labels) ++out[split];
        return out;
    }
};

/// Seeded SplitMix64 Fisher-Yates shuffle of the ids, then contiguous slices
/// sized by cumulative rounding: |train| = round(r1*n), |train|+|val| =
/// round((r1+r2)*n). Same seed gives the identical assignment on every
/// platform.
inline SplitAssignment split_examples(const std::vector<std::string>& example_ids,
                                      const SplitRatios& ratios,
                                      std::uint64_t seed) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (std::fabs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 ||
        ratios.test < 0) {
        throw BadRatios("split ratios must be non-negative and sum to 1");
    }
    std::vector<std::size_t> order(example_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, seed);

    const double n = static_cast<double>(example_ids.size());
    const std::size_t c1 = static_cast<std::size_t>(std::llround(ratios.train * n));
    const std::size_t c2 =
        static_cast<std::size_t>(std::llround((ratios.train + ratios.validation) * n));

    std::vector<std::string> label_by_index(example_ids.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const char* name = pos < c1 ? kSplitNames[0] : pos < c2 ? kSplitNames[1] : kSplitNames[2];
        label_by_index[order[pos]] = name;
    }

    SplitAssignment out;
    out.seed = seed;
    out.ratios = ratios;
    out.labels.reserve(example_ids.size());
    for (std::size_t i = 0; i < example_ids.size(); ++i) {
        out.labels.emplace_back(example_ids[i], label_by_index[i]);
    }
    return out;
}

inline json split_to_json(const SplitAssignment& a) {
    json assignment = json::object();
    for (const auto& [id, split] : a.labels) assignment[id] = split;
    return json{{"schema_version", 1},
                {"seed", a.seed},
                {"ratios", {a.ratios.train, a.ratios.validation, a.ratios.test}},
                {"assignment", assignment}};
}

// ---------------------------------------------------------------------------
// score comparison

/// Relative deltas in percent: 100 * (treatment - base) / base per metric.
/// A metric with base 0 has no defined delta.
struct ReportDeltas {
    std::optional<double> meteor, rouge1, rouge2, rougeL;
};

inline std::optional<double> relative_delta(double base, double treatment) {
    if (base == 0.0) return std::nullopt;
    return 100.0 * (treatment - base) / base;
}

inline ReportDeltas compare_reports(const metrics::EvalReport& base,
                                    const metrics::EvalReport& treatment) {
    if (base.n == 0 || treatment.n == 0) throw EmptyInput("compare_reports: empty report");
    ReportDeltas d;
    d.meteor = relative_delta(base.meteor, treatment.meteor);
    d.rouge1 = relative_delta(base.rouge1, treatment.rouge1);
    d.rouge2 = relative_delta(base.rouge2, treatment.rouge2);
    d.rougeL = relative_delta(base.rougeL, treatment.rougeL);
    return d;
}

inline json deltas_to_json(const ReportDeltas& d) {
    auto field = [](const std::optional<double>& v) {
        return v ? json(round2(*v)) : json(nullptr);
    };
    return json{{"schema_version", 1},
                {"meteor_pct", field(d.meteor)},
                {"rouge1_pct", field(d.rouge1)},
                {"rouge2_pct", field(d.rouge2)},
                {"rougeL_pct", field(d.rougeL)}};
}

}  // namespace ctg::report
