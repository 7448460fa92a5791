#include "propinfer/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "propinfer/errors.hpp"

namespace propinfer {

using nlohmann::json;

GenerationSet generate_batch(const ModelEndpoint& endpoint, const std::string& prompt,
                             std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error("generate_batch: n must be >= 1");
    GenerationSet set;
    set.model_id = endpoint.model->id();
    set.prompt = prompt;
    set.texts = endpoint.model->generate(prompt, n, endpoint.decode, seed);
    if (set.texts.size() != n) throw Error("backend returned wrong completion count");
    return set;
}

std::vector<double> score_logprobs(const ModelEndpoint& endpoint, const std::string& text) {
    auto lp = endpoint.model->token_logprobs(text);
    if (!lp) throw ScoringUnsupported();
    return *lp;
}

double sequence_perplexity(const ModelEndpoint& endpoint, const std::string& text) {
    auto lp = score_logprobs(endpoint, text);
    if (lp.empty()) throw EmptySequence();
    double sum = 0.0;
    for (double v : lp) sum += v;
    return std::exp(-sum / static_cast<double>(lp.size()));
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteModel::RemoteModel(std::string base_url, std::string model_name, RetryPolicy retry)
    : base_url_(std::move(base_url)), model_name_(std::move(model_name)), retry_(retry) {}

namespace {

json post_completion(const std::string& base_url, const json& body, const RetryPolicy& retry) {
    httplib::Client client(base_url);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv("PROPINFER_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    auto backoff = retry.initial_backoff;
    std::string last_error = "unknown";
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post("/v1/completions", headers, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            last_error = std::string("bad JSON: ") + e.what();
        }
    }
    throw TransportError("completion request failed after retries: " + last_error);
}

}  // namespace

std::vector<std::string> RemoteModel::generate(const std::string& prompt, std::size_t n,
                                               const DecodeParams& params, std::uint64_t seed) {
    auto request_chunk = [&](std::size_t count) {
        json body{{"model", model_name_},
                  {"prompt", prompt},
                  {"max_tokens", params.max_tokens},
                  {"temperature", params.temperature},
                  {"n", count},
                  {"seed", seed}};
        if (!params.stop.empty()) body["stop"] = params.stop;
        json resp = post_completion(base_url_, body, retry_);
        std::vector<std::string> texts;
        for (const auto& choice : resp.at("choices"))
            texts.push_back(choice.value("text", std::string{}));
        if (texts.size() != count) throw TransportError("endpoint returned wrong choice count");
        return texts;
    };

    std::vector<std::string> out(n);
    std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    if (n_chunks <= 1) return request_chunk(n);

    // slot-indexed assembly: completion order never affects returned order
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::size_t pool = std::min(max_in_flight, n_chunks);
    for (std::size_t w = 0; w < pool; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                std::size_t begin = c * chunk_size;
                std::size_t count = std::min(chunk_size, n - begin);
                try {
                    auto texts = request_chunk(count);
                    std::copy(texts.begin(), texts.end(), out.begin() + begin);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::optional<std::vector<double>> RemoteModel::token_logprobs(const std::string& text) {
    json body{{"model", model_name_}, {"prompt", text},   {"max_tokens", 0},
              {"temperature", 0.0},   {"logprobs", true}, {"echo", true}};
    json resp = post_completion(base_url_, body, retry_);
    const auto& choice = resp.at("choices").at(0);
    if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) return std::nullopt;
    std::vector<double> out;
    for (const auto& v : choice.at("logprobs").at("token_logprobs")) {
        if (v.is_null()) continue;  // leading token has no conditional logprob
        out.push_back(v.get<double>());
    }
    return out;
}

LabelValue classify_remote(const std::string& text, const PropertySpec& spec,
                           const ModelEndpoint& gateway) {
    if (!spec.classifier_prompt) throw Error("property '" + spec.name + "' has no classifier_prompt");
    std::string prompt = *spec.classifier_prompt;
    prompt.replace(prompt.find("{text}"), 6, text);
    auto set = generate_batch(gateway, prompt, 1, 0);
    const std::string& response = set.texts.at(0);
    if (response.empty()) return LabelValue::NotApplicable;

    auto start = response.find_first_not_of(" \t\n");
    if (start == std::string::npos) return LabelValue::NotApplicable;
    auto trimmed = response.substr(start);
    if (trimmed.starts_with("1.")) return LabelValue::One;
    if (trimmed.starts_with("2.")) return LabelValue::Zero;
    // fallback: class-word containment
    PropertySpec words = spec;
    words.classifier_prompt.reset();
    return keyword_label(response, words);
}

}  // namespace propinfer
