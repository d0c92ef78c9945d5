// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ctg/errors.hpp"
#include "ctg/jsonl.hpp"
#include "ctg/prompt.hpp"

// Client for an OpenAI-compatible /v1/completions endpoint, with bounded
// concurrency, order-stable batching, retry with exponential backoff, and
// deterministic mock backends so tests and CI never need a model server.
namespace ctg::gen {

using json = nlohmann::json;

struct BackendUnavailable : Error {
    using Error::Error;
};

struct BadResponse : Error {
    using Error::Error;
};

/// Transient failure: worth retrying with backoff.
struct TransientBackendError : Error {
    using Error::Error;
};

struct GenParams {
    std::string model = "local";
    std::string endpoint;                      // e.g. http://127.0.0.1:8000
    double temperature = 0.0;
    int max_new_tokens = 128;
    std::vector<std::string> stop = {"###"};
    int max_attempts = 5;                      // total tries per prompt
    double backoff_base_sec = 1.0;             // doubled per retry
    double backoff_factor = 2.0;
    int timeout_sec = 60;
};

struct Prediction {
    std::string example_id;
    std::string text;
    double latency_ms = 0.0;
    int attempts = 0;
};

/// Cut at the first stop sequence, then trim surrounding whitespace.
inline std::string trim_completion(std::string_view raw, const std::vector<std::string>& stops) {
    std::size_t cut = raw.size();
    for (const std::string& stop : stops) {
        if (stop.empty()) continue;
        std::size_t pos = raw.find(stop);
        if (pos != std::string_view::npos) cut = std::min(cut, pos);
    }
    std::string_view out = raw.substr(0, cut);
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.front()))) {
        out.remove_prefix(1);
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) {
        out.remove_suffix(1);
    }
    return std::string(out);
}

/// One completion request. Implementations throw TransientBackendError for
/// retryable failures and BadResponse for schema violations.
class CompletionBackend {
  public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const std::string& prompt, const GenParams& params) = 0;
};

// ---------------------------------------------------------------------------
// HTTP backend

inline json build_completion_request(const std::string& prompt, const GenParams& params) {
    return json{{"model", params.model},
                {"prompt", prompt},
                {"max_tokens", params.max_new_tokens},
                {"temperature", params.temperature},
                {"stop", params.stop}};
}

inline std::string parse_completion_response(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& ex) {
        throw BadResponse(std::string("completion response is not JSON: ") + ex.what());
    }
    if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty()) {
        throw BadResponse("completion response lacks choices");
    }
    const json& choice = j.at("choices").front();
    if (!choice.contains("text") || !choice.at("text").is_string()) {
        throw BadResponse("completion choice lacks text");
    }
    return choice.at("text").get<std::string>();
}

class HttpBackend : public CompletionBackend {
  public:
    explicit HttpBackend(std::string endpoint) : endpoint_(std::move(endpoint)) {}

    std::string complete(const std::string& prompt, const GenParams& params) override {
        httplib::Client client(endpoint_);
        client.set_connection_timeout(params.timeout_sec, 0);
        client.set_read_timeout(params.timeout_sec, 0);
        auto res = client.Post("/v1/completions", build_completion_request(prompt, params).dump(),
                               "application/json");
        if (!res) {
            throw TransientBackendError("no response from " + endpoint_ + ": " +
                                        httplib::to_string(res.error()));
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransientBackendError("backend returned HTTP " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw BadResponse("backend returned HTTP " + std::to_string(res->status));
        }
        return parse_completion_response(res->body);
    }

  private:
    std::string endpoint_;
};

// ---------------------------------------------------------------------------
// mock backends: echo-gold, fixed:<text>, replay:<capture-file>

/// Echoes the gold response for a known inference prompt. Built from prompt
/// records: the key is the inference-time rendering (empty response slot).
class EchoGoldBackend : public CompletionBackend {
  public:
    explicit EchoGoldBackend(const std::vector<prompt::PromptRecord>& records) {
        for (const auto& r : records) {
            gold_by_prompt_[prompt::render_text(r.instruction, r.input, "")] = r.response;
        }
    }

    std::string complete(const std::string& prompt_text, const GenParams&) override {
        auto it = gold_by_prompt_.find(prompt_text);
        if (it == gold_by_prompt_.end()) {
            throw BadResponse("echo-gold mock has no gold for this prompt");
        }
        return it->second;
    }

  private:
    std::map<std::string, std::string> gold_by_prompt_;
};

class FixedBackend : public CompletionBackend {
  public:
    explicit FixedBackend(std::string text) : text_(std::move(text)) {}

    std::string complete(const std::string&, const GenParams&) override { return text_; }

  private:
    std::string text_;
};

/// Replays completions captured from a live run. Capture lines are
/// {"prompt": ..., "text": ...}; lookups are exact on the prompt text.
class ReplayBackend : public CompletionBackend {
  public:
    explicit ReplayBackend(const std::filesystem::path& capture_file) {
        io::for_each_line(capture_file, [&](std::size_t, const std::string& line) {
            json j = json::parse(line);
            by_prompt_[j.at("prompt").get<std::string>()] = j.at("text").get<std::string>();
        });
    }

    std::string complete(const std::string& prompt_text, const GenParams&) override {
        auto it = by_prompt_.find(prompt_text);
        if (it == by_prompt_.end()) throw BadResponse("replay capture misses this prompt");
        return it->second;
    }

  private:
    std::map<std::string, std::string> by_prompt_;
};

/// Wraps another backend and appends {"prompt", "text"} capture lines,
/// producing replay files for offline runs.
class RecordingBackend : public CompletionBackend {
  public:
    RecordingBackend(std::unique_ptr<CompletionBackend> inner, const std::filesystem::path& path)
        : inner_(std::move(inner)), out_(path, std::ios::app) {
        if (!out_) throw IoFailure("cannot open capture file " + path.string());
    }

    std::string complete(const std::string& prompt_text, const GenParams& params) override {
        std::string text = inner_->complete(prompt_text, params);
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << json{{"prompt", prompt_text}, {"text", text}}.dump() << '\n';
        return text;
    }

  private:
    std::unique_ptr<CompletionBackend> inner_;
    std::ofstream out_;
    std::mutex mutex_;
};

/// Mock spec strings accepted by the CLI: "echo-gold", "fixed:<text>",
/// "replay:<capture-file>".
inline std::unique_ptr<CompletionBackend> make_mock_backend(
    std::string_view spec, const std::vector<prompt::PromptRecord>& records) {
    if (spec == "echo-gold") return std::make_unique<EchoGoldBackend>(records);
    if (spec.rfind("fixed:", 0) == 0) {
        return std::make_unique<FixedBackend>(std::string(spec.substr(6)));
    }
    if (spec.rfind("replay:", 0) == 0) {
        return std::make_unique<ReplayBackend>(std::filesystem::path(std::string(spec.substr(7))));
    }
    throw DomainError("unknown mock mode: " + std::string(spec));
}

// ---------------------------------------------------------------------------
// generation

/// Sends the inference-time prompt (empty response slot), retrying transient
/// failures with exponential backoff until max_attempts, then fails with
/// BackendUnavailable. The returned text is stop- and whitespace-trimmed.
inline Prediction generate_one(const prompt::PromptRecord& record,
                               CompletionBackend& backend,
                               const GenParams& params) {
    const std::string prompt_text = prompt::render_text(record.instruction, record.input, "");
    const auto start = std::chrono::steady_clock::now();
    double delay_sec = params.backoff_base_sec;
    std::string last_error;
    for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
        try {
            std::string raw = backend.complete(prompt_text, params);
            Prediction p;
            p.example_id = record.example_id;
            p.text = trim_completion(raw, params.stop);
            p.attempts = attempt;
            p.latency_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();
            return p;
        } catch (const TransientBackendError& ex) {
            last_error = ex.what();
            if (attempt < params.max_attempts) {
                std::this_thread::sleep_for(std::chrono::duration<double>(delay_sec));
                delay_sec *= params.backoff_factor;
            }
        }
    }
    throw BackendUnavailable("gave up after " + std::to_string(params.max_attempts) +
                             " attempts: " + last_error);
}

struct GenFailure {
    std::string example_id;
    std::string error;
};

struct GenBatch {
    std::vector<Prediction> predictions;  // successes, in input order
    std::vector<GenFailure> failures;     // in input order
};

/// Runs the batch with at most max_in_flight requests outstanding. Outputs
/// keep input order regardless of completion order. Per-item errors are
/// collected; the batch itself fails only when every item failed.
inline GenBatch generate_batch(const std::vector<prompt::PromptRecord>& records,
                               CompletionBackend& backend,
                               const GenParams& params,
                               std::size_t max_in_flight) {
    if (max_in_flight < 1) throw DomainError("generate_batch: max_in_flight must be >= 1");
    GenBatch out;
    if (records.empty()) return out;

    std::vector<std::optional<Prediction>> slots(records.size());
    std::vector<std::optional<GenFailure>> errors(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            try {
                slots[i] = generate_one(records[i], backend, params);
            } catch (const Error& ex) {
                errors[i] = GenFailure{records[i].example_id, ex.what()};
            }
        }
    };

    const std::size_t workers = std::min(max_in_flight, records.size());
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        if (slots[i]) {
            out.predictions.push_back(std::move(*slots[i]));
        } else if (errors[i]) {
            out.failures.push_back(std::move(*errors[i]));
        }
    }
    if (out.predictions.empty()) {
        throw BackendUnavailable("all " + std::to_string(records.size()) +
                                 " batch items failed; first error: " +
                                 (out.failures.empty() ? "?" : out.failures.front().error));
    }
    return out;
}

inline json prediction_to_json(const Prediction& p) {
    return json{{"schema_version", 1}, {"example_id", p.example_id}, {"prediction", p.text}};
}

}  // namespace ctg::gen
