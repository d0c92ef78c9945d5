// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctg/corpus.hpp"
#include "ctg/errors.hpp"
#include "ctg/extract.hpp"
#include "ctg/genclient.hpp"
#include "ctg/jsonl.hpp"
#include "ctg/kg.hpp"
#include "ctg/metrics.hpp"
#include "ctg/parallel.hpp"
#include "ctg/prompt.hpp"
#include "ctg/quant.hpp"
#include "ctg/report.hpp"

// Stage runners behind the ctg command-line tool. Stages communicate through
// files (JSONL on a shared out-dir), matching the two-workflow setup: prompt
// creation straight from examples, or relation extraction first and prompt
// creation from examples plus triples. Every stage is idempotent for fixed
// inputs and seed; logs go to stderr, data only to files.
//
// Exit codes: 0 success, 1 data errors, 2 configuration errors.
namespace ctg::cli {

using json = nlohmann::json;

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitConfig = 2;

struct PipelineConfig {
    // shared
    fs::path out_dir = ".";
    fs::path in_path;        // stage input override; stages have defaults
    std::size_t jobs = 1;
    std::function<void(const std::string&)> log;  // defaults to stderr

    // ingest
    fs::path corpus_path;
    std::string field_of_study;  // empty keeps every record

    // kg
    std::string kg_source = "heuristic";  // heuristic | endpoint
    std::string extractor_endpoint;
    std::size_t kg_max_in_flight = 4;
    std::size_t kg_docs_per_request = 16;
    int kg_max_retries = 3;

    // prompt
    prompt::Mode mode = prompt::Mode::Plain;
    std::size_t budget = prompt::kDefaultBudget;
    fs::path triples_path;   // triples stage file for with_kg
    std::string kg_flag;     // "heuristic" computes triples inline
    fs::path split_path;     // optional split.json for per-split export

    // generate
    gen::GenParams gen_params;
    std::string mock;        // echo-gold | fixed:<text> | replay:<file>
    fs::path capture_path;   // record live completions for replay
    std::size_t max_in_flight = 4;

    // eval
    fs::path predictions_path;
    fs::path examples_path;

    // split
    report::SplitRatios ratios;
    std::uint64_t seed = 0;

    // quantize
    int bits = 4;
    std::size_t block_len = 64;
    bool print_levels = false;
    fs::path quant_out;
};

namespace detail {

inline void log_line(const PipelineConfig& config, const std::string& message) {
    if (config.log) {
        config.log(message);
    } else {
        std::fprintf(stderr, "[ctg] %s\n", message.c_str());
    }
}

inline fs::path stage_input(const PipelineConfig& config, const char* default_name) {
    return config.in_path.empty() ? config.out_dir / default_name : config.in_path;
}

inline bool require_file(const PipelineConfig& config, const fs::path& path,
                         const char* what) {
    if (fs::exists(path)) return true;
    log_line(config, std::string("error: ") + what + " not found: " + path.string());
    return false;
}

inline std::vector<extract::CitationExample> load_examples(const fs::path& path) {
    std::vector<extract::CitationExample> examples;
    io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        try {
            examples.push_back(extract::example_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    });
    return examples;
}

inline std::vector<prompt::PromptRecord> load_prompts(const fs::path& path) {
    std::vector<prompt::PromptRecord> records;
    io::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        try {
            records.push_back(prompt::prompt_record_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    });
    return records;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// ingest: parse, validate, filter by field of study, drop empty records.
/// Writes cleaned.jsonl plus rejections.json (reason -> count).
inline int run_ingest(const PipelineConfig& config) {
    if (!detail::require_file(config, config.corpus_path, "corpus file")) return kExitConfig;
    fs::create_directories(config.out_dir);

    std::vector<std::pair<std::size_t, std::string>> lines;
    io::for_each_line(config.corpus_path, [&](std::size_t line_no, const std::string& line) {
        lines.emplace_back(line_no, line);
    });

    // Parsing is pure per record; validation errors are rejections, not
    // failures, so one bad line never kills an ingest run.
    std::vector<std::optional<corpus::PaperRecord>> parsed(lines.size());
    std::vector<std::string> parse_reason(lines.size());
    parallel_for(lines.size(), config.jobs, [&](std::size_t i) {
        try {
            parsed[i] = corpus::parse_record(lines[i].second);
        } catch (const corpus::SpanOutOfBounds& ex) {
            parse_reason[i] = "span_out_of_bounds";
            detail::log_line(config, "reject line " + std::to_string(lines[i].first) + ": " +
                                         ex.what());
        } catch (const corpus::MalformedRecord& ex) {
            parse_reason[i] = "malformed_record";
            detail::log_line(config, "reject line " + std::to_string(lines[i].first) + ": " +
                                         ex.what());
        }
    });

    corpus::RejectionLog rejections;
    std::set<std::string> seen_ids;
    io::LineWriter cleaned(config.out_dir / "cleaned.jsonl");
    std::size_t kept = 0;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (!parsed[i]) {
            rejections.add(parse_reason[i]);
            continue;
        }
        corpus::PaperRecord& rec = *parsed[i];
        if (!seen_ids.insert(rec.paper_id).second) {
            rejections.add("duplicate_id");
            detail::log_line(config, "reject line " + std::to_string(lines[i].first) +
                                         ": duplicate paper_id " + rec.paper_id);
            continue;
        }
        if (!config.field_of_study.empty() &&
            !corpus::has_field_of_study(rec, config.field_of_study)) {
            rejections.add("field_of_study");
            continue;
        }
        if (auto reason = corpus::clean_rejection_reason(rec)) {
            rejections.add(*reason);
            continue;
        }
        cleaned.write(corpus::serialize_record(rec));
        ++kept;
    }
    io::write_file(config.out_dir / "rejections.json", rejections.to_json().dump(2) + "\n");
    detail::log_line(config, "ingest kept=" + std::to_string(kept) +
                                 " rejected=" + std::to_string(rejections.total()));
    return kept > 0 ? kExitOk : kExitData;
}

/// extract: cleaned corpus -> citation examples + unresolved-reference log.
inline int run_extract(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "cleaned.jsonl");
    if (!detail::require_file(config, in, "cleaned corpus")) return kExitConfig;
    fs::create_directories(config.out_dir);

    corpus::CorpusIndex index;
    std::vector<std::string> order;
    io::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
        corpus::PaperRecord rec = corpus::parse_record(line);
        order.push_back(rec.paper_id);
        if (!index.add(std::move(rec))) {
            throw corpus::DuplicateId(in.string() + ":" + std::to_string(line_no) +
                                      ": duplicate paper_id");
        }
    });

    auto resolve = [&index](const std::string& id) { return index.find(id); };
    io::LineWriter writer(config.out_dir / "examples.jsonl");
    std::vector<extract::UnresolvedRef> unresolved;
    std::size_t n_examples = 0;
    for (const std::string& id : order) {
        const corpus::PaperRecord* rec = index.find(id);
        for (const auto& ex : extract::build_examples(*rec, resolve, &unresolved)) {
            writer.write(extract::example_to_json(ex));
            ++n_examples;
        }
    }

    json unresolved_json = json::array();
    std::map<std::string, std::size_t> by_reason;
    for (const auto& u : unresolved) {
        ++by_reason[u.reason];
        unresolved_json.push_back({{"source_paper_id", u.source_paper_id},
                                   {"ref_id", u.ref_id},
                                   {"paragraph_index", u.paragraph_index},
                                   {"sentence_start", u.sentence_start},
                                   {"reason", u.reason}});
    }
    io::write_file(config.out_dir / "unresolved.json",
                   json{{"schema_version", 1},
                        {"count", unresolved.size()},
                        {"by_reason", by_reason},
                        {"entries", unresolved_json}}
                           .dump(2) +
                       "\n");
    detail::log_line(config, "extract examples=" + std::to_string(n_examples) +
                                 " unresolved=" + std::to_string(unresolved.size()));
    return n_examples > 0 ? kExitOk : kExitData;
}

namespace detail {

/// Per-example triples: each of the four text fields is extracted as its own
/// document and the results are merged in field order.
inline constexpr const char* kKgFields[4] = {"source_abstract", "target_abstract",
                                             "target_introduction", "target_conclusion"};

inline const std::string& kg_field_text(const extract::CitationExample& ex, int field) {
    switch (field) {
        case 0: return ex.source_abstract;
        case 1: return ex.target_abstract;
        case 2: return ex.target_introduction;
        default: return ex.target_conclusion;
    }
}

inline kg::TripleSet heuristic_triples(const extract::CitationExample& ex) {
    kg::TripleSet merged;
    merged.example_id = ex.example_id;
    for (int f = 0; f < 4; ++f) {
        merged.merge(kg::extract_heuristic(kg_field_text(ex, f)));
    }
    return merged;
}

}  // namespace detail

/// kg: examples -> one TripleSet per example (triples.jsonl), via the
/// built-in heuristic or an external extractor endpoint.
inline int run_kg(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "examples.jsonl");
    if (!detail::require_file(config, in, "examples file")) return kExitConfig;
    if (config.kg_source != "heuristic" && config.kg_source != "endpoint") {
        detail::log_line(config, "error: unknown --kg-source " + config.kg_source);
        return kExitConfig;
    }
    if (config.kg_source == "endpoint" && config.extractor_endpoint.empty()) {
        detail::log_line(config, "error: --endpoint required with --kg-source endpoint");
        return kExitConfig;
    }
    fs::create_directories(config.out_dir);
    const auto examples = detail::load_examples(in);

    std::vector<kg::TripleSet> sets(examples.size());
    if (config.kg_source == "heuristic") {
        parallel_for(examples.size(), config.jobs,
                     [&](std::size_t i) { sets[i] = detail::heuristic_triples(examples[i]); });
    } else {
        std::vector<std::pair<std::string, std::string>> docs;
        docs.reserve(examples.size() * 4);
        for (const auto& ex : examples) {
            for (int f = 0; f < 4; ++f) {
                docs.emplace_back(ex.example_id + "/" + detail::kKgFields[f],
                                  detail::kg_field_text(ex, f));
            }
        }
        kg::ExtractorConfig kg_config;
        kg_config.max_retries = config.kg_max_retries;
        kg_config.max_in_flight = config.kg_max_in_flight;
        kg_config.docs_per_request = config.kg_docs_per_request;
        kg_config.warn = [&](const std::string& m) { detail::log_line(config, "warn: " + m); };
        auto transport =
            kg::http_transport(config.extractor_endpoint, config.gen_params.timeout_sec);
        auto per_doc = kg::extract_external(docs, transport, kg_config);
        for (std::size_t i = 0; i < examples.size(); ++i) {
            sets[i].example_id = examples[i].example_id;
            for (int f = 0; f < 4; ++f) sets[i].merge(per_doc[i * 4 + f]);
        }
    }

    io::LineWriter writer(config.out_dir / "triples.jsonl");
    std::size_t total = 0;
    for (const auto& set : sets) {
        writer.write(kg::tripleset_to_json(set));
        total += set.triples.size();
    }
    detail::log_line(config, "kg sets=" + std::to_string(sets.size()) +
                                 " triples=" + std::to_string(total));
    return kExitOk;
}

/// prompt: examples (+ triples in with_kg mode) -> prompts JSONL per split
/// plus the training manifest.
inline int run_prompt(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "examples.jsonl");
    if (!detail::require_file(config, in, "examples file")) return kExitConfig;

    std::map<std::string, kg::TripleSet> triples_by_id;
    bool inline_heuristic = false;
    if (config.mode == prompt::Mode::WithKg) {
        if (!config.triples_path.empty()) {
            if (!detail::require_file(config, config.triples_path, "triples file")) {
                return kExitConfig;
            }
            io::for_each_line(config.triples_path, [&](std::size_t, const std::string& line) {
                kg::TripleSet set = kg::tripleset_from_json(json::parse(line));
                triples_by_id[set.example_id] = std::move(set);
            });
        } else if (config.kg_flag == "heuristic") {
            inline_heuristic = true;
        } else {
            detail::log_line(config,
                             "error: --mode with_kg needs --triples <file> or --kg heuristic");
            return kExitConfig;
        }
    }

    // The budget must at least hold the fixed scaffold; catching that here
    // keeps a misconfigured budget a config error rather than a data one.
    try {
        prompt::truncate_to_budget(prompt::PromptParts{}, prompt::kInstruction, "", nullptr,
                                   config.budget);
    } catch (const prompt::BudgetTooSmall& ex) {
        detail::log_line(config, std::string("error: ") + ex.what());
        return kExitConfig;
    }

    std::optional<std::map<std::string, std::string>> assignment;
    if (!config.split_path.empty()) {
        if (!detail::require_file(config, config.split_path, "split file")) return kExitConfig;
        json split = json::parse(io::read_file(config.split_path));
        assignment.emplace();
        for (const auto& [id, name] : split.at("assignment").items()) {
            (*assignment)[id] = name.get<std::string>();
        }
    }

    fs::create_directories(config.out_dir);
    const auto examples = detail::load_examples(in);
    if (examples.empty()) {
        detail::log_line(config, "error: no examples to render");
        return kExitData;
    }

    std::vector<prompt::PromptRecord> records(examples.size());
    parallel_for(examples.size(), config.jobs, [&](std::size_t i) {
        const kg::TripleSet* triples = nullptr;
        kg::TripleSet inline_set;
        if (config.mode == prompt::Mode::WithKg) {
            if (inline_heuristic) {
                inline_set = detail::heuristic_triples(examples[i]);
                triples = &inline_set;
            } else {
                auto it = triples_by_id.find(examples[i].example_id);
                if (it == triples_by_id.end()) {
                    throw Error("no triples for example " + examples[i].example_id);
                }
                triples = &it->second;
            }
        }
        records[i] = prompt::render_prompt(examples[i], triples, config.mode, config.budget);
    });

    prompt::TrainingManifest manifest;
    manifest = prompt::export_dataset(records, manifest, config.out_dir,
                                      assignment ? &*assignment : nullptr);
    std::string counts;
    for (const auto& [name, n] : manifest.split_counts) {
        counts += " " + name + "=" + std::to_string(n);
    }
    detail::log_line(config, "prompt rendered=" + std::to_string(records.size()) + counts);
    return kExitOk;
}

/// generate: prompts -> predictions.jsonl through a live endpoint or a mock.
inline int run_generate(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "prompts.jsonl");
    if (!detail::require_file(config, in, "prompts file")) return kExitConfig;
    if (config.mock.empty() && config.gen_params.endpoint.empty()) {
        detail::log_line(config, "error: generate needs --endpoint or --mock");
        return kExitConfig;
    }
    fs::create_directories(config.out_dir);
    const auto records = detail::load_prompts(in);

    std::unique_ptr<gen::CompletionBackend> backend;
    if (!config.mock.empty()) {
        backend = gen::make_mock_backend(config.mock, records);
    } else {
        backend = std::make_unique<gen::HttpBackend>(config.gen_params.endpoint);
        if (!config.capture_path.empty()) {
            backend = std::make_unique<gen::RecordingBackend>(std::move(backend),
                                                              config.capture_path);
        }
    }

    gen::GenBatch batch;
    try {
        batch = gen::generate_batch(records, *backend, config.gen_params, config.max_in_flight);
    } catch (const gen::BackendUnavailable& ex) {
        detail::log_line(config, std::string("error: ") + ex.what());
        return kExitData;
    }

    io::LineWriter writer(config.out_dir / "predictions.jsonl");
    for (const auto& p : batch.predictions) writer.write(gen::prediction_to_json(p));
    if (!batch.failures.empty()) {
        json failures = json::array();
        for (const auto& f : batch.failures) {
            failures.push_back({{"example_id", f.example_id}, {"error", f.error}});
            detail::log_line(config, "warn: generation failed for " + f.example_id + ": " +
                                         f.error);
        }
        io::write_file(config.out_dir / "generation_failures.json",
                       json{{"schema_version", 1}, {"failures", failures}}.dump(2) + "\n");
    }
    detail::log_line(config, "generate predictions=" + std::to_string(batch.predictions.size()) +
                                 " failures=" + std::to_string(batch.failures.size()));
    return kExitOk;
}

/// eval: predictions + examples -> METEOR/ROUGE report.json.
inline int run_eval(const PipelineConfig& config) {
    const fs::path predictions_path = config.predictions_path.empty()
                                          ? config.out_dir / "predictions.jsonl"
                                          : config.predictions_path;
    const fs::path examples_path =
        config.examples_path.empty() ? config.out_dir / "examples.jsonl" : config.examples_path;
    if (!detail::require_file(config, predictions_path, "predictions file")) return kExitConfig;
    if (!detail::require_file(config, examples_path, "examples file")) return kExitConfig;

    std::map<std::string, std::string> gold;
    for (const auto& ex : detail::load_examples(examples_path)) {
        gold[ex.example_id] = ex.gold_citation;
    }
    std::vector<std::pair<std::string, std::string>> predictions;  // id, text
    io::for_each_line(predictions_path, [&](std::size_t line_no, const std::string& line) {
        json j = json::parse(line);
        predictions.emplace_back(j.at("example_id").get<std::string>(),
                                 j.at("prediction").get<std::string>());
        if (!gold.count(predictions.back().first)) {
            throw Error(predictions_path.string() + ":" + std::to_string(line_no) +
                        ": prediction for unknown example " + predictions.back().first);
        }
    });
    if (predictions.empty()) {
        detail::log_line(config, "error: no predictions to evaluate");
        return kExitData;
    }

    std::vector<metrics::ExampleScores> scores(predictions.size());
    parallel_for(predictions.size(), config.jobs, [&](std::size_t i) {
        const auto& [id, text] = predictions[i];
        scores[i] = metrics::score_example(id, text, gold.at(id));
    });
    const metrics::EvalReport report = metrics::aggregate(std::move(scores));
    fs::create_directories(config.out_dir);
    io::write_file(config.out_dir / "report.json", metrics::report_to_json(report).dump(2) + "\n");
    char line[160];
    std::snprintf(line, sizeof line,
                  "eval n=%zu meteor=%.2f rouge1=%.2f rouge2=%.2f rougeL=%.2f", report.n,
                  report.meteor, report.rouge1, report.rouge2, report.rougeL);
    detail::log_line(config, line);
    return kExitOk;
}

/// stats: examples -> corpus statistics JSON.
inline int run_stats(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "examples.jsonl");
    if (!detail::require_file(config, in, "examples file")) return kExitConfig;
    const auto examples = detail::load_examples(in);
    if (examples.empty()) {
        detail::log_line(config, "error: no examples");
        return kExitData;
    }
    const report::CorpusStats stats = report::corpus_stats(examples);
    fs::create_directories(config.out_dir);
    io::write_file(config.out_dir / "stats.json", report::stats_to_json(stats).dump(2) + "\n");
    detail::log_line(config, "stats citations=" + std::to_string(stats.n_citations) +
                                 " unique_papers=" + std::to_string(stats.n_unique_papers));
    return kExitOk;
}

/// split: examples -> seeded train/validation/test assignment plus id lists.
inline int run_split(const PipelineConfig& config) {
    const fs::path in = detail::stage_input(config, "examples.jsonl");
    if (!detail::require_file(config, in, "examples file")) return kExitConfig;
    std::vector<std::string> ids;
    io::for_each_line(in, [&](std::size_t, const std::string& line) {
        ids.push_back(json::parse(line).at("example_id").get<std::string>());
    });
    if (ids.empty()) {
        detail::log_line(config, "error: no examples");
        return kExitData;
    }
    report::SplitAssignment assignment;
    try {
        assignment = report::split_examples(ids, config.ratios, config.seed);
    } catch (const report::BadRatios& ex) {
        detail::log_line(config, std::string("error: ") + ex.what());
        return kExitConfig;
    }
    fs::create_directories(config.out_dir);
    io::write_file(config.out_dir / "split.json",
                   report::split_to_json(assignment).dump(2) + "\n");
    for (const char* name : report::kSplitNames) {
        io::LineWriter writer(config.out_dir / (std::string(name) + "_ids.txt"));
        for (const auto& [id, split] : assignment.labels) {
            if (split == name) writer.write_raw(id);
        }
    }
    std::string counts;
    for (const auto& [name, n] : assignment.counts()) {
        counts += " " + name + "=" + std::to_string(n);
    }
    detail::log_line(config, "split" + counts);
    return kExitOk;
}

/// quantize: JSONL vectors -> blockwise codes; optionally print the level
/// table (index, k_i, normalized) to stdout.
inline int run_quantize(const PipelineConfig& config) {
    quant::QuantLevels levels;
    try {
        levels = quant::build_levels(config.bits);
    } catch (const DomainError& ex) {
        detail::log_line(config, std::string("error: ") + ex.what());
        return kExitConfig;
    }
    if (config.print_levels) quant::print_levels(levels, std::cout);
    if (config.in_path.empty()) {
        if (config.print_levels) return kExitOk;
        detail::log_line(config, "error: quantize needs --in (or --print-levels)");
        return kExitConfig;
    }
    if (!detail::require_file(config, config.in_path, "vector file")) return kExitConfig;
    if (config.block_len < 1) {
        detail::log_line(config, "error: --block must be >= 1");
        return kExitConfig;
    }

    const fs::path out_path =
        config.quant_out.empty() ? config.out_dir / "codes.jsonl" : config.quant_out;
    fs::create_directories(out_path.parent_path().empty() ? "." : out_path.parent_path());
    io::LineWriter writer(out_path);
    std::size_t n_vectors = 0;
    io::for_each_line(config.in_path, [&](std::size_t line_no, const std::string& line) {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& ex) {
            throw Error(config.in_path.string() + ":" + std::to_string(line_no) + ": " +
                        ex.what());
        }
        std::vector<double> values = j.at("values").get<std::vector<double>>();
        const auto blocks = quant::quantize_blocks(values, levels, config.block_len);
        json blocks_json = json::array();
        for (const auto& b : blocks) {
            blocks_json.push_back(
                {{"scale", b.scale}, {"codes", b.codes}, {"block_len", b.block_len}});
        }
        writer.write(json{{"schema_version", 1},
                          {"id", j.value("id", std::string("vec") + std::to_string(line_no))},
                          {"bits", config.bits},
                          {"block_len", config.block_len},
                          {"blocks", blocks_json}});
        ++n_vectors;
    });
    detail::log_line(config, "quantize vectors=" + std::to_string(n_vectors));
    return kExitOk;
}

/// Dispatches one subcommand. Data-level exceptions surface here as exit 1
/// with their file/line context preserved in the message.
inline int run(const std::string& subcommand, const PipelineConfig& config) {
    try {
        if (subcommand == "ingest") return run_ingest(config);
        if (subcommand == "extract") return run_extract(config);
        if (subcommand == "kg") return run_kg(config);
        if (subcommand == "prompt") return run_prompt(config);
        if (subcommand == "generate") return run_generate(config);
        if (subcommand == "eval") return run_eval(config);
        if (subcommand == "stats") return run_stats(config);
        if (subcommand == "split") return run_split(config);
        if (subcommand == "quantize") return run_quantize(config);
    } catch (const Error& ex) {
        detail::log_line(config, std::string("error: ") + ex.what());
        return kExitData;
    } catch (const json::exception& ex) {
        detail::log_line(config, std::string("error: bad stage file: ") + ex.what());
        return kExitData;
    }
    detail::log_line(config, "error: unknown subcommand " + subcommand);
    return kExitConfig;
}

}  // namespace ctg::cli
