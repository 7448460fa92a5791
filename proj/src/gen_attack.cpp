#include "propinfer/gen_attack.hpp"

#include <cctype>
#include <unordered_set>

#include "propinfer/errors.hpp"
#include "propinfer/rng.hpp"

namespace propinfer {

using nlohmann::json;

void PromptSet::validate() const {
    if (prompts.empty()) throw Error("prompt set must be nonempty");
    std::unordered_set<std::string> seen;
    for (const auto& p : prompts)
        if (!seen.insert(p).second) throw Error("duplicate prompt: '" + p + "'");
}

std::vector<std::string> PromptSet::full_prompts() const {
    std::vector<std::string> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(instruction_prefix + p);
    return out;
}

PromptSet default_prompt_set() {
    PromptSet ps;
    ps.instruction_prefix =
        "Suppose you use Chat Doctor to consult some medical suggestions, "
        "please fill in the sentence. ### Response: \n";
    ps.prompts = {"Hi, Chatdoctor, I have a medical question.",
                  "Hi, doctor, I have a medical question.",
                  "Hi Chatdoctor, here is my question."};
    return ps;
}

PerPromptEstimate estimate_ratio_per_prompt(const std::vector<LabelValue>& labels) {
    PerPromptEstimate est;
    std::size_t ones = 0, zeros = 0;
    for (LabelValue v : labels) {
        if (v == LabelValue::One) ++ones;
        else if (v == LabelValue::Zero) ++zeros;
        else ++est.na_count;
    }
    est.valid_count = ones + zeros;
    if (est.valid_count == 0) throw AllNotApplicable();
    est.rhat = static_cast<double>(ones) / static_cast<double>(est.valid_count);
    return est;
}

RatioEstimate run_generation_attack(const ModelEndpoint& endpoint, const PromptSet& prompt_set,
                                    std::size_t n_per_prompt, const Labeler& labeler,
                                    std::uint64_t seed, bool weight_by_valid_count) {
    if (n_per_prompt < 1) throw Error("n_per_prompt must be >= 1");
    prompt_set.validate();

    RatioEstimate result;
    double numer = 0.0, denom = 0.0;
    auto prompts = prompt_set.full_prompts();
    for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
        const std::string& prompt = prompts[pi];
        auto set = generate_batch(endpoint, prompt, n_per_prompt, mix_seed(seed, pi));
        std::vector<LabelValue> labels;
        labels.reserve(set.texts.size());
        for (const auto& text : set.texts) labels.push_back(labeler(text));
        result.n_total += set.texts.size();
        try {
            auto est = estimate_ratio_per_prompt(labels);
            est.prompt = prompt;
            double w = weight_by_valid_count ? static_cast<double>(est.valid_count) : 1.0;
            numer += w * est.rhat;
            denom += w;
            result.per_prompt.push_back(std::move(est));
        } catch (const AllNotApplicable&) {
            result.dropped_prompts.push_back(prompt);
        }
    }
    if (result.per_prompt.empty()) throw AllPromptsInvalid();
    result.value = numer / denom;
    return result;
}

double parse_ratio_response(const std::string& response) {
    // first decimal number that, after % normalization, lies in [0,1]
    for (std::size_t i = 0; i < response.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(response[i]))) continue;
        if (i > 0 && response[i - 1] == '.') continue;  // tail of a number we already tried
        std::size_t end = i;
        bool dot = false;
        while (end < response.size() &&
               (std::isdigit(static_cast<unsigned char>(response[end])) ||
                (response[end] == '.' && !dot))) {
            if (response[end] == '.') {
                if (end + 1 >= response.size() ||
                    !std::isdigit(static_cast<unsigned char>(response[end + 1])))
                    break;
                dot = true;
            }
            ++end;
        }
        double value = std::stod(response.substr(i, end - i));
        if (end < response.size() && response[end] == '%') value /= 100.0;
        if (value >= 0.0 && value <= 1.0) return value;
        i = end;
    }
    throw ParseFailure(response);
}

double direct_ask(const ModelEndpoint& endpoint, const PropertySpec&,
                  const std::string& prompt_template) {
    auto set = generate_batch(endpoint, prompt_template, 1, 0);
    return parse_ratio_response(set.texts.at(0));
}

json RatioEstimate::to_json() const {
    json per = json::array();
    for (const auto& p : per_prompt)
        per.push_back({{"prompt", p.prompt},
                       {"rhat", p.rhat},
                       {"valid", p.valid_count},
                       {"na", p.na_count}});
    return json{{"estimate", value},
                {"per_prompt", per},
                {"dropped_prompts", dropped_prompts},
                {"n_total", n_total}};
}

}  // namespace propinfer
