#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "propinfer/gateway.hpp"

namespace propinfer {

/// The two fine-tuning behaviors the lab imitates. QAMode memorizes only the
/// output side; ChatCompletionMode mirrors the joint input-output distribution.
enum class Mode { QAMode, ChatCompletionMode };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Word lists defining where a binary property lives (input side, output side,
/// or both) and how strongly it is expressed. `boost` is the probability mass
/// a side shifts onto the active signal class.
struct VocabSpec {
    std::vector<std::string> neutral_words;
    std::vector<std::string> x_signal_pos;
    std::vector<std::string> x_signal_neg;
    std::vector<std::string> y_signal_pos;
    std::vector<std::string> y_signal_neg;
    double boost = 0.5;

    void validate() const;  // throws InvalidVocab
};

enum class Side { Input, Output };

/// Property-conditioned unigram-per-side text model. Per generated sample a
/// latent bit b ~ Bernoulli(ratio) selects the signal class; token
/// distributions are then fixed per side, so containment and perplexity have
/// closed forms. Immutable after construction; sampling is counter-based and
/// safe to run concurrently.
class SyntheticModel : public TextModel {
public:
    SyntheticModel(double ratio, Mode mode, VocabSpec vocab, std::size_t sample_len,
                   std::uint64_t seed);

    std::string id() const override;
    std::vector<std::string> generate(const std::string& prompt, std::size_t n,
                                      const DecodeParams& params, std::uint64_t seed) override;
    std::optional<std::vector<double>> token_logprobs(const std::string& text) override;

    /// Like generate, but keeps the input/output split, for building lab datasets.
    std::vector<Sample> generate_samples(std::size_t n, std::uint64_t seed) const;

    /// Closed-form probability that a generated sample contains `word`:
    /// r*c_1 + (1-r)*c_0 with c_b = 1 - prod over emitted sides (1-p_b)^L.
    double expected_containment(const std::string& word) const;

    /// log of the mixture token probability r*p_1 + (1-r)*p_0 on `side`.
    double exact_token_logprob(const std::string& token, Side side) const;

    double ratio() const { return ratio_; }
    Mode mode() const { return mode_; }
    std::size_t sample_len() const { return sample_len_; }
    const VocabSpec& vocab() const { return vocab_; }
    std::uint64_t seed() const { return seed_; }

    nlohmann::json to_json() const;
    static std::shared_ptr<SyntheticModel> from_json(const nlohmann::json& j);

private:
    struct SideDist {
        std::vector<std::string> words;           // side universe, construction order
        std::unordered_map<std::string, std::size_t> index;
        std::vector<double> p_pos, p_neg;         // per-token probs under b=1 / b=0
        std::vector<double> cdf_pos, cdf_neg;
        double prob(const std::string& w, bool b) const;
    };

    SideDist make_side(const std::vector<std::string>& pos,
                       const std::vector<std::string>& neg, bool property_agnostic) const;
    const std::string& sample_token(const SideDist& d, bool b, class SplitRng& rng) const;

    double ratio_;
    Mode mode_;
    VocabSpec vocab_;
    std::size_t sample_len_;
    std::uint64_t seed_;
    SideDist x_, y_;
};

/// Validates the vocab and builds an immutable generator.
std::shared_ptr<SyntheticModel> build_generator(double ratio, Mode mode, const VocabSpec& vocab,
                                                std::size_t sample_len, std::uint64_t seed);

ModelEndpoint synthetic_endpoint(std::shared_ptr<SyntheticModel> model);

/// Small ready-made lab vocabulary: 100 neutral words plus 3 signal words per
/// class per side. `x_only` drops the output-side signals.
VocabSpec default_lab_vocab(bool x_only = false);

/// Keyword property matching default_lab_vocab's signal lists.
PropertySpec lab_property(const VocabSpec& vocab, const std::string& name = "signal");

}  // namespace propinfer
