// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctg/errors.hpp"
#include "ctg/porter.hpp"

// Native METEOR / ROUGE-1 / ROUGE-2 / ROUGE-L with corpus aggregation.
// METEOR is the exact+stem two-stage variant (no synonym tables), parameters
// alpha = 0.9, gamma = 0.5, theta = 3. ROUGE runs on normalize_tokens output
// with no stemming; scores are tokenization-sensitive, so the tokenizer is
// pinned here and nowhere else.
namespace ctg::metrics {

using json = nlohmann::json;

struct ScoreTriplet {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ExampleScores {
    std::string example_id;
    double meteor = 0.0;
    ScoreTriplet rouge1, rouge2, rougeL;
};

/// Lowercases and splits on maximal runs of non-alphanumeric characters.
/// Bytes >= 0x80 count as word characters so multi-byte letters survive.
inline std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        bool word_char = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                         (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word_char) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                   : static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline double f1_of(double precision, double recall) {
    double s = precision + recall;
    return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

/// Clipped n-gram overlap. Either side with no n-grams yields all zeros.
inline ScoreTriplet rouge_n(const std::vector<std::string>& candidate,
                            const std::vector<std::string>& reference,
                            std::size_t n) {
    ScoreTriplet s;
    if (n == 0 || candidate.size() < n || reference.size() < n) return s;

    auto gram_counts = [n](const std::vector<std::string>& tokens) {
        std::unordered_map<std::string, std::size_t> counts;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string key = tokens[i];
            for (std::size_t k = 1; k < n; ++k) {
                key.push_back('\x1f');
                key += tokens[i + k];
            }
            ++counts[key];
        }
        return counts;
    };

    const auto cand = gram_counts(candidate);
    const auto ref = gram_counts(reference);
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    const std::size_t n_cand = candidate.size() - n + 1;
    const std::size_t n_ref = reference.size() - n + 1;
    s.precision = static_cast<double>(overlap) / static_cast<double>(n_cand);
    s.recall = static_cast<double>(overlap) / static_cast<double>(n_ref);
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

/// Longest common subsequence length by dynamic programming.
inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

inline ScoreTriplet rouge_l(const std::vector<std::string>& candidate,
                            const std::vector<std::string>& reference) {
    ScoreTriplet s;
    if (candidate.empty() || reference.empty()) return s;
    const double lcs = static_cast<double>(lcs_length(candidate, reference));
    s.precision = lcs / static_cast<double>(candidate.size());
    s.recall = lcs / static_cast<double>(reference.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

namespace detail {

/// Chunk count of an alignment given as cand->ref pairs sorted by candidate
/// position: a new chunk starts wherever consecutive matched candidate
/// positions are not adjacent or their references are not adjacent in order.
inline std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::size_t chunks = 0;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        if (t == 0 || pairs[t].first != pairs[t - 1].first + 1 ||
            pairs[t].second != pairs[t - 1].second + 1) {
            ++chunks;
        }
    }
    return chunks;
}

/// One alignment stage: a maximum matching between the still-unmatched
/// candidate and reference tokens under `key` equality that, among maximum
/// matchings, minimizes the chunk count of the cumulative alignment. Exact
/// via depth-first search with a node budget; candidate-ascending traversal
/// makes ties resolve to the lexicographically smallest pair list. Sentences
/// rarely repeat enough words to approach the budget; if they do, the best
/// alignment found so far (always a maximum matching) is kept.
class StageSolver {
  public:
    StageSolver(const std::vector<std::string>& cand_keys,
                const std::vector<std::string>& ref_keys,
                std::vector<std::size_t>& cand_match,   // cand index -> ref index or npos
                std::vector<bool>& ref_matched)
        : cand_keys_(cand_keys), ref_keys_(ref_keys), cand_match_(cand_match),
          ref_matched_(ref_matched) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    void solve() {
        for (std::size_t i = 0; i < cand_keys_.size(); ++i) {
            if (cand_match_[i] != npos) continue;
            std::vector<std::size_t> refs;
            for (std::size_t j = 0; j < ref_keys_.size(); ++j) {
                if (!ref_matched_[j] && ref_keys_[j] == cand_keys_[i]) refs.push_back(j);
            }
            if (!refs.empty()) slots_.push_back({i, std::move(refs)});
        }
        if (slots_.empty()) return;

        target_ = max_cardinality();
        best_found_ = false;
        chosen_.clear();
        nodes_ = 0;
        dfs(0, 0);
        for (const auto& [ci, rj] : best_) {
            cand_match_[ci] = rj;
            ref_matched_[rj] = true;
        }
    }

  private:
    struct Slot {
        std::size_t cand;
        std::vector<std::size_t> refs;
    };

    // The equality graph is a disjoint union of bicliques (one per distinct
    // key), so the maximum cardinality is the sum of min(count, count).
    std::size_t max_cardinality() const {
        std::map<std::string, std::pair<std::size_t, std::size_t>> classes;
        for (const auto& slot : slots_) ++classes[cand_keys_[slot.cand]].first;
        std::map<std::string, std::size_t> ref_counts;
        for (std::size_t j = 0; j < ref_keys_.size(); ++j) {
            if (!ref_matched_[j]) ++ref_counts[ref_keys_[j]];
        }
        std::size_t total = 0;
        for (const auto& [key, counts] : classes) {
            auto it = ref_counts.find(key);
            if (it != ref_counts.end()) total += std::min(counts.first, it->second);
        }
        return total;
    }

    std::size_t full_alignment_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& extra) const {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < cand_match_.size(); ++i) {
            if (cand_match_[i] != npos) pairs.emplace_back(i, cand_match_[i]);
        }
        pairs.insert(pairs.end(), extra.begin(), extra.end());
        std::sort(pairs.begin(), pairs.end());
        return count_chunks(pairs);
    }

    void dfs(std::size_t slot_index, std::size_t matched) {
        if (nodes_ > kNodeBudget && best_found_) return;
        ++nodes_;
        const std::size_t remaining = slots_.size() - slot_index;
        if (matched + remaining < target_) return;  // cannot reach a maximum matching
        if (slot_index == slots_.size()) {
            if (matched != target_) return;
            std::size_t chunks = full_alignment_chunks(chosen_);
            if (!best_found_ || chunks < best_chunks_) {
                best_found_ = true;
                best_chunks_ = chunks;
                best_ = chosen_;
            }
            return;
        }
        const Slot& slot = slots_[slot_index];
        for (std::size_t rj : slot.refs) {
            if (ref_taken_.count(rj)) continue;
            ref_taken_.insert(rj);
            chosen_.emplace_back(slot.cand, rj);
            dfs(slot_index + 1, matched + 1);
            chosen_.pop_back();
            ref_taken_.erase(rj);
        }
        dfs(slot_index + 1, matched);  // leave this candidate unmatched
    }

    static constexpr std::size_t kNodeBudget = 200000;

    const std::vector<std::string>& cand_keys_;
    const std::vector<std::string>& ref_keys_;
    std::vector<std::size_t>& cand_match_;
    std::vector<bool>& ref_matched_;
    std::vector<Slot> slots_;
    std::vector<std::pair<std::size_t, std::size_t>> chosen_, best_;
    std::set<std::size_t> ref_taken_;
    std::size_t target_ = 0;
    std::size_t best_chunks_ = 0;
    std::size_t nodes_ = 0;
    bool best_found_ = false;
};

}  // namespace detail

/// Two-stage METEOR alignment: stage 1 matches exact tokens, stage 2 matches
/// Porter stems over the residue. Each stage takes a maximum matching that,
/// among maximum matchings, minimizes the cumulative chunk count.
inline MeteorAlignment meteor_align(const std::vector<std::string>& candidate,
                                    const std::vector<std::string>& reference) {
    constexpr std::size_t npos = detail::StageSolver::npos;
    std::vector<std::size_t> cand_match(candidate.size(), npos);
    std::vector<bool> ref_matched(reference.size(), false);

    detail::StageSolver exact(candidate, reference, cand_match, ref_matched);
    exact.solve();

    std::vector<std::string> cand_stems(candidate.size()), ref_stems(reference.size());
    for (std::size_t i = 0; i < candidate.size(); ++i) cand_stems[i] = porter::stem(candidate[i]);
    for (std::size_t j = 0; j < reference.size(); ++j) ref_stems[j] = porter::stem(reference[j]);
    detail::StageSolver stems(cand_stems, ref_stems, cand_match, ref_matched);
    stems.solve();

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < cand_match.size(); ++i) {
        if (cand_match[i] != npos) pairs.emplace_back(i, cand_match[i]);
    }
    MeteorAlignment out;
    out.matches = pairs.size();
    out.chunks = detail::count_chunks(pairs);
    return out;
}

inline constexpr double kMeteorAlpha = 0.9;
inline constexpr double kMeteorGamma = 0.5;
inline constexpr double kMeteorTheta = 3.0;

/// METEOR score in [0, 1]: F_mean = P*R / (alpha*P + (1-alpha)*R), penalty =
/// gamma * (chunks/m)^theta, score = F_mean * (1 - penalty); 0 when m = 0.
inline double meteor(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const MeteorAlignment a = meteor_align(candidate, reference);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double precision = m / static_cast<double>(candidate.size());
    const double recall = m / static_cast<double>(reference.size());
    const double f_mean =
        precision * recall / (kMeteorAlpha * precision + (1.0 - kMeteorAlpha) * recall);
    const double penalty =
        kMeteorGamma * std::pow(static_cast<double>(a.chunks) / m, kMeteorTheta);
    return f_mean * (1.0 - penalty);
}

// ---------------------------------------------------------------------------
// per-example scoring and corpus aggregation

inline ExampleScores score_example(const std::string& example_id,
                                   const std::string& candidate_text,
                                   const std::string& reference_text) {
    const auto cand = normalize_tokens(candidate_text);
    const auto ref = normalize_tokens(reference_text);
    ExampleScores s;
    s.example_id = example_id;
    s.meteor = meteor(cand, ref);
    s.rouge1 = rouge_n(cand, ref, 1);
    s.rouge2 = rouge_n(cand, ref, 2);
    s.rougeL = rouge_l(cand, ref);
    return s;
}

/// Corpus-level report. Headline numbers are arithmetic means of per-example
/// F1 (ROUGE) / score (METEOR), scaled by 100 and rounded to two decimals,
/// the scale of the tables this pipeline feeds.
struct EvalReport {
    std::size_t n = 0;
    double meteor = 0.0;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
    std::vector<ExampleScores> per_example;
};

inline double scale_100_2dp(double mean) {
    return std::round(mean * 10000.0) / 100.0;
}

inline EvalReport aggregate(std::vector<ExampleScores> per_example) {
    if (per_example.empty()) throw EmptyInput("aggregate: no example scores");
    EvalReport report;
    report.n = per_example.size();
    double meteor_sum = 0, r1 = 0, r2 = 0, rl = 0;
    for (const ExampleScores& s : per_example) {
        meteor_sum += s.meteor;
        r1 += s.rouge1.f1;
        r2 += s.rouge2.f1;
        rl += s.rougeL.f1;
    }
    const double n = static_cast<double>(report.n);
    report.meteor = scale_100_2dp(meteor_sum / n);
    report.rouge1 = scale_100_2dp(r1 / n);
    report.rouge2 = scale_100_2dp(r2 / n);
    report.rougeL = scale_100_2dp(rl / n);
    report.per_example = std::move(per_example);
    return report;
}

inline json triplet_to_json(const ScoreTriplet& t) {
    return json{{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
}

inline json report_to_json(const EvalReport& r) {
    json per = json::array();
    for (const ExampleScores& s : r.per_example) {
        per.push_back(json{{"example_id", s.example_id},
                           {"meteor", s.meteor},
                           {"rouge1", triplet_to_json(s.rouge1)},
                           {"rouge2", triplet_to_json(s.rouge2)},
                           {"rougeL", triplet_to_json(s.rougeL)}});
    }
    return json{{"schema_version", 1}, {"n", r.n},          {"meteor", r.meteor},
                {"rouge1", r.rouge1},  {"rouge2", r.rouge2}, {"rougeL", r.rougeL},
                {"per_example", per}};
}

inline EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.n = j.at("n").get<std::size_t>();
    r.meteor = j.at("meteor").get<double>();
    r.rouge1 = j.at("rouge1").get<double>();
    r.rouge2 = j.at("rouge2").get<double>();
    r.rougeL = j.at("rougeL").get<double>();
    return r;
}

}  // namespace ctg::metrics
