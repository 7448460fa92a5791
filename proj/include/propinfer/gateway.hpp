#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "propinfer/corpus.hpp"

namespace propinfer {

struct DecodeParams {
    int max_tokens = 64;
    double temperature = 1.0;  // 0 means greedy
    std::vector<std::string> stop;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{100};  // doubled per retry
};

/// Uniform model access: sampling, and token-level log-probability scoring
/// when the backend exposes it (nullopt otherwise).
class TextModel {
public:
    virtual ~TextModel() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> generate(const std::string& prompt, std::size_t n,
                                              const DecodeParams& params, std::uint64_t seed) = 0;
    virtual std::optional<std::vector<double>> token_logprobs(const std::string& text) = 0;
};

struct ModelEndpoint {
    std::shared_ptr<TextModel> model;
    DecodeParams decode;
};

struct GenerationSet {
    std::string model_id;
    std::string prompt;
    std::vector<std::string> texts;
    std::vector<LabelValue> labels;  // empty until labeled; else parallel to texts
};

/// Exactly n completions. Synthetic backends are deterministic under seed;
/// remote ones receive the seed when the wire protocol carries it.
/// Empty completions are retained (they label NotApplicable downstream).
GenerationSet generate_batch(const ModelEndpoint& endpoint, const std::string& prompt,
                             std::size_t n, std::uint64_t seed);

/// One log-probability (<= 0) per token of the endpoint's own tokenization.
/// Throws ScoringUnsupported when the backend has no logprobs.
std::vector<double> score_logprobs(const ModelEndpoint& endpoint, const std::string& text);

/// exp(-mean of score_logprobs); always >= 1 for a proper model.
double sequence_perplexity(const ModelEndpoint& endpoint, const std::string& text);

/// Completions-style HTTP+JSON backend. Auth bearer token read from
/// PROPINFER_API_KEY when set.
class RemoteModel : public TextModel {
public:
    RemoteModel(std::string base_url, std::string model_name, RetryPolicy retry = {});

    std::string id() const override { return model_name_; }
    std::vector<std::string> generate(const std::string& prompt, std::size_t n,
                                      const DecodeParams& params, std::uint64_t seed) override;
    std::optional<std::vector<double>> token_logprobs(const std::string& text) override;

    /// Requests above this size fan out concurrently in slot-indexed chunks.
    std::size_t chunk_size = 16;
    std::size_t max_in_flight = 4;

private:
    std::string base_url_;
    std::string model_name_;
    RetryPolicy retry_;
};

/// Fill spec.classifier_prompt with `text`, query the endpoint, and map the
/// response onto a label: "1."/positive class word -> One, "2."/negative
/// class word -> Zero, anything else (including empty) -> NotApplicable.
LabelValue classify_remote(const std::string& text, const PropertySpec& spec,
                           const ModelEndpoint& gateway);

}  // namespace propinfer
