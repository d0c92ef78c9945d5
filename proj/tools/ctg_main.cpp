// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctg/cli.hpp"
#include "ctg/jsonl.hpp"

namespace {

using ctg::cli::PipelineConfig;
using json = nlohmann::json;

// --config values fill in options the user did not set explicitly on the
// command line; explicit flags always win.
struct ConfigMerge {
    json values = json::object();

    void load(const std::filesystem::path& path) {
        values = json::parse(ctg::io::read_file(path));
        if (!values.is_object()) throw ctg::Error("--config must hold a JSON object");
    }

    template <typename T>
    void apply(const CLI::Option* opt, const char* key, T& target) const {
        if (opt && opt->count() > 0) return;
        if (!values.contains(key)) return;
        target = values.at(key).get<T>();
    }

    void apply_path(const CLI::Option* opt, const char* key, std::filesystem::path& target) const {
        if (opt && opt->count() > 0) return;
        if (!values.contains(key)) return;
        target = std::filesystem::path(values.at(key).get<std::string>());
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ctg: citation text generation dataset, prompting and evaluation pipeline"};
    app.require_subcommand(1);

    PipelineConfig config;
    std::string config_file;
    std::string mode_name = "plain";
    std::string in_path, out_dir = ".", triples_path, split_path, capture_path, quant_out;
    std::string predictions_path, examples_path;
    std::vector<double> ratio_values;

    app.add_option("--config", config_file, "JSON file merged under explicit flags")
        ->envname("CTG_CONFIG");
    app.add_option("--jobs", config.jobs, "worker threads per stage")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "parse, filter and clean a corpus file");
    auto* opt_corpus = ingest->add_option("--in", in_path, "corpus JSONL file");
    auto* opt_field = ingest->add_option("--field", config.field_of_study,
                                         "keep only records with this field-of-study tag");

    auto* extract_cmd = app.add_subcommand("extract", "build citation examples");
    auto* opt_ex_in = extract_cmd->add_option("--in", in_path, "cleaned corpus file");

    auto* kg_cmd = app.add_subcommand("kg", "extract relation triples per example");
    auto* opt_kg_in = kg_cmd->add_option("--in", in_path, "examples file");
    auto* opt_kg_source =
        kg_cmd->add_option("--kg-source", config.kg_source, "heuristic | endpoint")
            ->capture_default_str();
    auto* opt_kg_endpoint =
        kg_cmd->add_option("--endpoint", config.extractor_endpoint, "extractor base URL");
    kg_cmd->add_option("--max-in-flight", config.kg_max_in_flight, "concurrent requests")
        ->capture_default_str();
    kg_cmd->add_option("--docs-per-request", config.kg_docs_per_request,
                       "documents batched per request")
        ->capture_default_str();
    kg_cmd->add_option("--retries", config.kg_max_retries, "attempts per request")
        ->capture_default_str();

    auto* prompt_cmd = app.add_subcommand("prompt", "render prompts and export the dataset");
    auto* opt_p_in = prompt_cmd->add_option("--in", in_path, "examples file");
    auto* opt_mode = prompt_cmd->add_option("--mode", mode_name, "plain | with_kg")
                         ->capture_default_str();
    auto* opt_budget =
        prompt_cmd->add_option("--budget", config.budget, "token budget")->capture_default_str();
    auto* opt_triples = prompt_cmd->add_option("--triples", triples_path, "triples stage file");
    auto* opt_kg_flag =
        prompt_cmd->add_option("--kg", config.kg_flag, "'heuristic' computes triples inline");
    auto* opt_split_file =
        prompt_cmd->add_option("--split", split_path, "split.json for per-split export");

    auto* gen_cmd = app.add_subcommand("generate", "run prompts through a completion backend");
    auto* opt_g_in = gen_cmd->add_option("--in", in_path, "prompts file");
    auto* opt_endpoint =
        gen_cmd->add_option("--endpoint", config.gen_params.endpoint, "OpenAI-compatible base URL");
    auto* opt_model = gen_cmd->add_option("--model", config.gen_params.model, "model name")
                          ->capture_default_str();
    auto* opt_mock = gen_cmd->add_option(
        "--mock", config.mock, "echo-gold | fixed:<text> | replay:<capture-file>");
    gen_cmd->add_option("--capture", capture_path, "record completions to this file");
    gen_cmd->add_option("--max-in-flight", config.max_in_flight, "concurrent requests")
        ->capture_default_str();
    gen_cmd->add_option("--temperature", config.gen_params.temperature, "sampling temperature")
        ->capture_default_str();
    gen_cmd->add_option("--max-new-tokens", config.gen_params.max_new_tokens, "completion cap")
        ->capture_default_str();
    gen_cmd->add_option("--timeout", config.gen_params.timeout_sec, "request timeout seconds")
        ->capture_default_str();
    gen_cmd->add_option("--attempts", config.gen_params.max_attempts, "tries per prompt")
        ->capture_default_str();
    gen_cmd->add_option("--backoff-base", config.gen_params.backoff_base_sec,
                        "first retry delay in seconds")
        ->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold citations");
    eval_cmd->add_option("--predictions", predictions_path, "predictions file");
    eval_cmd->add_option("--examples", examples_path, "examples file with gold citations");

    auto* stats_cmd = app.add_subcommand("stats", "corpus statistics over examples");
    auto* opt_s_in = stats_cmd->add_option("--in", in_path, "examples file");

    auto* split_cmd = app.add_subcommand("split", "seeded train/validation/test assignment");
    auto* opt_sp_in = split_cmd->add_option("--in", in_path, "examples file");
    auto* opt_seed = split_cmd->add_option("--seed", config.seed, "shuffle seed")
                         ->capture_default_str();
    auto* opt_ratios = split_cmd
                           ->add_option("--ratios", ratio_values,
                                        "train validation test fractions (default 0.8 0.1 0.1)")
                           ->expected(3);

    auto* quant_cmd = app.add_subcommand("quantize", "blockwise quantile quantization");
    auto* opt_q_in = quant_cmd->add_option("--in", in_path, "vectors JSONL ({id, values})");
    auto* opt_bits = quant_cmd->add_option("--bits", config.bits, "bit width")
                         ->capture_default_str();
    auto* opt_block = quant_cmd->add_option("--block", config.block_len, "block length")
                          ->capture_default_str();
    quant_cmd->add_option("--out", quant_out, "codes output file");
    quant_cmd->add_flag("--print-levels", config.print_levels,
                        "print the level table (index, k_i, normalized)");

    // every subcommand writes into --out-dir
    std::map<std::string, CLI::Option*> out_dir_options;
    for (CLI::App* sub : {ingest, extract_cmd, kg_cmd, prompt_cmd, gen_cmd, eval_cmd, stats_cmd,
                          split_cmd, quant_cmd}) {
        out_dir_options[sub->get_name()] =
            sub->add_option("--out-dir", out_dir, "stage output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ctg::cli::kExitConfig;
    }

    ConfigMerge merged;
    if (!config_file.empty()) {
        try {
            merged.load(config_file);
        } catch (const std::exception& ex) {
            std::fprintf(stderr, "[ctg] error: cannot read --config: %s\n", ex.what());
            return ctg::cli::kExitConfig;
        }
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    merged.apply(opt_field, "field", config.field_of_study);
    merged.apply(opt_kg_source, "kg_source", config.kg_source);
    merged.apply(opt_kg_endpoint, "extractor_endpoint", config.extractor_endpoint);
    merged.apply(opt_mode, "mode", mode_name);
    merged.apply(opt_budget, "budget", config.budget);
    merged.apply(opt_kg_flag, "kg", config.kg_flag);
    merged.apply(opt_triples, "triples", triples_path);
    merged.apply(opt_split_file, "split", split_path);
    merged.apply(opt_endpoint, "endpoint", config.gen_params.endpoint);
    merged.apply(opt_model, "model", config.gen_params.model);
    merged.apply(opt_mock, "mock", config.mock);
    merged.apply(opt_seed, "seed", config.seed);
    merged.apply(opt_bits, "bits", config.bits);
    merged.apply(opt_block, "block", config.block_len);
    if (opt_ratios->count() == 0 && merged.values.contains("ratios")) {
        ratio_values = merged.values.at("ratios").get<std::vector<double>>();
    }

    // stage input: prefer the per-subcommand --in, then config file keys
    const std::map<std::string, const CLI::Option*> in_options = {
        {"ingest", opt_corpus}, {"extract", opt_ex_in}, {"kg", opt_kg_in},
        {"prompt", opt_p_in},   {"generate", opt_g_in}, {"stats", opt_s_in},
        {"split", opt_sp_in},   {"quantize", opt_q_in},
    };
    if (auto it = in_options.find(name); it != in_options.end()) {
        merged.apply(it->second, "in", in_path);
    }
    merged.apply(out_dir_options.at(name), "out_dir", out_dir);
    merged.apply(app.get_option("--jobs"), "jobs", config.jobs);

    if (name == "ingest") {
        if (in_path.empty()) {
            std::fprintf(stderr, "[ctg] error: ingest needs --in <corpus.jsonl>\n");
            return ctg::cli::kExitConfig;
        }
        config.corpus_path = in_path;
    } else {
        config.in_path = in_path;
    }
    config.out_dir = out_dir;
    config.triples_path = triples_path;
    config.split_path = split_path;
    config.capture_path = capture_path;
    config.quant_out = quant_out;
    config.predictions_path = predictions_path;
    config.examples_path = examples_path;

    if (auto mode = ctg::prompt::mode_from_name(mode_name)) {
        config.mode = *mode;
    } else {
        std::fprintf(stderr, "[ctg] error: unknown --mode %s\n", mode_name.c_str());
        return ctg::cli::kExitConfig;
    }
    if (!ratio_values.empty()) {
        config.ratios = {ratio_values[0], ratio_values[1], ratio_values[2]};
    }

    return ctg::cli::run(name, config);
}
