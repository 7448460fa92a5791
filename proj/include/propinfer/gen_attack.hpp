#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "propinfer/gateway.hpp"

namespace propinfer {

/// Prompts encoding contextual knowledge of the fine-tuning data.
struct PromptSet {
    std::string instruction_prefix;
    std::vector<std::string> prompts;  // pairwise distinct, nonempty

    std::vector<std::string> full_prompts() const;
    void validate() const;
};

/// The default ChatDoctor prompt set (three medical-question openers).
PromptSet default_prompt_set();

struct PerPromptEstimate {
    std::string prompt;
    double rhat = 0.0;
    std::size_t valid_count = 0;
    std::size_t na_count = 0;
};

struct RatioEstimate {
    double value = 0.0;  // unweighted mean of per-prompt rhat values
    std::vector<PerPromptEstimate> per_prompt;
    std::vector<std::string> dropped_prompts;  // prompts with zero valid labels
    std::size_t n_total = 0;

    nlohmann::json to_json() const;
};

using Labeler = std::function<LabelValue(const std::string&)>;

/// (#One)/(#One+#Zero) plus the counts. Throws AllNotApplicable when no label
/// is One or Zero.
PerPromptEstimate estimate_ratio_per_prompt(const std::vector<LabelValue>& labels);

/// Black-box generation attack: sample n_per_prompt completions per prompt,
/// label each, and average the per-prompt ratio estimates. Prompts whose
/// labels are all NotApplicable are dropped from the aggregate and reported.
RatioEstimate run_generation_attack(const ModelEndpoint& endpoint, const PromptSet& prompt_set,
                                    std::size_t n_per_prompt, const Labeler& labeler,
                                    std::uint64_t seed, bool weight_by_valid_count = false);

/// Direct-ask baseline: query once with the template and parse the first
/// decimal number in [0,1] from the response ("NN%" normalizes to NN/100).
double direct_ask(const ModelEndpoint& endpoint, const PropertySpec& property,
                  const std::string& prompt_template);

/// Parsing half of direct_ask, exposed for testing.
double parse_ratio_response(const std::string& response);

}  // namespace propinfer
