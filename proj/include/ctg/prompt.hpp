// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctg/errors.hpp"
#include "ctg/extract.hpp"
#include "ctg/jsonl.hpp"
#include "ctg/kg.hpp"

// Rendering of citation examples into the instruction/input/response prompt
// scaffold, token budgeting, and instruction-tuning dataset export. Rendering
// is byte-deterministic: identical inputs give identical prompts.
namespace ctg::prompt {

using json = nlohmann::json;

struct BudgetTooSmall : Error {
    using Error::Error;
};

enum class Mode { Plain, WithKg };

inline std::string_view mode_name(Mode mode) {
    return mode == Mode::Plain ? "plain" : "with_kg";
}

inline std::optional<Mode> mode_from_name(std::string_view name) {
    if (name == "plain") return Mode::Plain;
    if (name == "with_kg") return Mode::WithKg;
    return std::nullopt;
}

inline constexpr std::string_view kInstruction =
    "Write the citation sentence that cites the target paper inside the source paper, "
    "using #REF for the reference marker.";

inline constexpr std::size_t kDefaultBudget = 2048;

/// Whitespace-delimited word count.
inline std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_word = false;
        } else if (!in_word) {
            ++n;
            in_word = true;
        }
    }
    return n;
}

/// Token estimate: words x 1.3, rounded up. Integer arithmetic so the
/// estimate is identical everywhere: ceil(13w / 10).
inline std::size_t estimate_tokens(std::string_view text) {
    return (13 * word_count(text) + 9) / 10;
}

/// The fixed prompt scaffold. The response slot carries the gold citation at
/// training time and is empty at inference.
inline std::string render_text(std::string_view instruction,
                               std::string_view input,
                               std::string_view response) {
    std::string out;
    out.reserve(instruction.size() + input.size() + response.size() + 48);
    out += "### Instruction:\n";
    out += instruction;
    out += "\n\n### Input:\n";
    out += input;
    out += "\n\n### Response:\n";
    out += response;
    return out;
}

/// The four example text fields, in input-block order.
struct PromptParts {
    std::string source_abstract;
    std::string target_abstract;
    std::string target_introduction;
    std::string target_conclusion;
};

inline std::string build_input_block(const PromptParts& parts, const std::string* kg_block) {
    std::string out;
    if (kg_block) {
        out += "KG_RELATIONS:\n";
        out += *kg_block;
        out += "\n";
    }
    out += "SOURCE_ABSTRACT: ";
    out += parts.source_abstract;
    out += "\nTARGET_ABSTRACT: ";
    out += parts.target_abstract;
    out += "\nTARGET_INTRODUCTION: ";
    out += parts.target_introduction;
    out += "\nTARGET_CONCLUSION: ";
    out += parts.target_conclusion;
    return out;
}

namespace detail {

/// Cuts `text` after its first `keep` words, preserving internal whitespace.
inline void trim_tail_words(std::string& text, std::size_t keep) {
    if (keep == 0) {
        text.clear();
        return;
    }
    std::size_t words = 0;
    bool in_word = false;
    std::size_t end = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            in_word = false;
        } else {
            if (!in_word) {
                if (words == keep) break;
                ++words;
            }
            in_word = true;
            end = i + 1;
        }
    }
    text.resize(end);
}

}  // namespace detail

/// Trims whole words from the tails of the truncatable fields, in priority
/// order target_introduction -> target_conclusion -> target_abstract ->
/// source_abstract, until the full rendered prompt fits the budget. The
/// instruction, gold response and KG relations are never truncated; if those
/// fixed parts alone overflow the budget, throws BudgetTooSmall.
inline PromptParts truncate_to_budget(PromptParts parts,
                                      std::string_view instruction,
                                      std::string_view response,
                                      const std::string* kg_block,
                                      std::size_t budget) {
    // Word counts are additive over the rendered template because every
    // field is whitespace-separated from the scaffold around it.
    const std::string empty_render = render_text(
        instruction, build_input_block(PromptParts{}, kg_block), response);
    const std::size_t fixed_words = word_count(empty_render);
    const std::size_t max_words = 10 * budget / 13;  // ceil(1.3w) <= budget
    if (fixed_words > max_words) {
        throw BudgetTooSmall("budget " + std::to_string(budget) +
                             " cannot hold the instruction, section headers and fixed parts (" +
                             std::to_string(fixed_words) + " words)");
    }
    std::size_t allowed = max_words - fixed_words;

    std::size_t counts[4] = {
        word_count(parts.source_abstract),
        word_count(parts.target_abstract),
        word_count(parts.target_introduction),
        word_count(parts.target_conclusion),
    };
    std::size_t total = counts[0] + counts[1] + counts[2] + counts[3];
    if (total <= allowed) return parts;

    std::string* by_priority[4] = {&parts.target_introduction, &parts.target_conclusion,
                                   &parts.target_abstract, &parts.source_abstract};
    std::size_t* count_by_priority[4] = {&counts[2], &counts[3], &counts[1], &counts[0]};
    for (int f = 0; f < 4 && total > allowed; ++f) {
        const std::size_t excess = total - allowed;
        const std::size_t drop = std::min(excess, *count_by_priority[f]);
        detail::trim_tail_words(*by_priority[f], *count_by_priority[f] - drop);
        *count_by_priority[f] -= drop;
        total -= drop;
    }
    return parts;
}

/// One rendered example. `rendered` is the training-time text (gold filled
/// in); the inference prompt is render_text(instruction, input, "").
struct PromptRecord {
    std::string example_id;
    Mode mode = Mode::Plain;
    std::string instruction;
    std::string input;
    std::string response;
    std::string rendered;
    std::size_t token_estimate = 0;
};

/// Renders one example. WithKg prepends the serialized triples ahead of the
/// source abstract; `triples` may be null only in plain mode.
inline PromptRecord render_prompt(const extract::CitationExample& example,
                                  const kg::TripleSet* triples,
                                  Mode mode,
                                  std::size_t budget = kDefaultBudget) {
    std::optional<std::string> kg_block;
    if (mode == Mode::WithKg) {
        if (!triples) throw DomainError("render_prompt: with_kg mode requires triples");
        kg_block = kg::serialize_triples(*triples);
    }
    const std::string* kg_ptr = kg_block ? &*kg_block : nullptr;

    PromptParts parts;
    parts.source_abstract = example.source_abstract;
    parts.target_abstract = example.target_abstract;
    parts.target_introduction = example.target_introduction;
    parts.target_conclusion = example.target_conclusion;
    parts = truncate_to_budget(std::move(parts), kInstruction, example.gold_citation, kg_ptr,
                               budget);

    PromptRecord record;
    record.example_id = example.example_id;
    record.mode = mode;
    record.instruction = std::string(kInstruction);
    record.input = build_input_block(parts, kg_ptr);
    record.response = example.gold_citation;
    record.rendered = render_text(record.instruction, record.input, record.response);
    record.token_estimate = estimate_tokens(record.rendered);
    return record;
}

// ---------------------------------------------------------------------------
// training manifest and dataset export

/// Fine-tuning configuration defaults exported next to the dataset.
struct TrainingManifest {
    std::string optimizer = "AdamW";
    std::string scheduler = "linear";
    double learning_rate = 3e-4;
    int warmup_steps = 100;
    int quantization_bits = 4;
    std::map<std::string, std::size_t> split_counts;
};

inline json manifest_to_json(const TrainingManifest& m) {
    json splits = json::object();
    for (const auto& [name, count] : m.split_counts) splits[name] = count;
    return json{{"schema_version", 1},
                {"optimizer", m.optimizer},
                {"scheduler", m.scheduler},
                {"learning_rate", m.learning_rate},
                {"warmup_steps", m.warmup_steps},
                {"quantization_bits", m.quantization_bits},
                {"split_counts", splits}};
}

inline json prompt_record_to_json(const PromptRecord& r) {
    return json{{"schema_version", 1},
                {"example_id", r.example_id},
                {"mode", std::string(mode_name(r.mode))},
                {"instruction", r.instruction},
                {"input", r.input},
                {"output", r.response}};
}

inline PromptRecord prompt_record_from_json(const json& j) {
    PromptRecord r;
    r.example_id = j.at("example_id").get<std::string>();
    auto mode = mode_from_name(j.at("mode").get<std::string>());
    if (!mode) throw DomainError("prompt file carries unknown mode");
    r.mode = *mode;
    r.instruction = j.at("instruction").get<std::string>();
    r.input = j.at("input").get<std::string>();
    r.response = j.at("output").get<std::string>();
    r.rendered = render_text(r.instruction, r.input, r.response);
    r.token_estimate = estimate_tokens(r.rendered);
    return r;
}

/// Writes one JSONL file per split ({instruction, input, output} records plus
/// ids) and the manifest. Without an assignment everything lands in
/// prompts.jsonl; with one, records go to <split>.jsonl by example id.
/// Returns the manifest actually written (split counts filled in).
inline TrainingManifest export_dataset(
    const std::vector<PromptRecord>& records,
    TrainingManifest manifest,
    const std::filesystem::path& out_dir,
    const std::map<std::string, std::string>* assignment = nullptr) {
    if (records.empty()) throw EmptyInput("export_dataset: no prompt records");
    std::filesystem::create_directories(out_dir);

    std::map<std::string, std::vector<const PromptRecord*>> by_split;
    if (assignment) {
        for (const PromptRecord& r : records) {
            auto it = assignment->find(r.example_id);
            const std::string split = it == assignment->end() ? "unassigned" : it->second;
            by_split[split].push_back(&r);
        }
    } else {
        auto& all = by_split["prompts"];
        for (const PromptRecord& r : records) all.push_back(&r);
    }

    manifest.split_counts.clear();
    for (const auto& [split, list] : by_split) {
        io::LineWriter writer(out_dir / (split + ".jsonl"));
        for (const PromptRecord* r : list) writer.write(prompt_record_to_json(*r));
        manifest.split_counts[split] = list.size();
    }
    io::write_file(out_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    return manifest;
}

}  // namespace ctg::prompt
