#include "propinfer/synth_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "propinfer/errors.hpp"
#include "propinfer/rng.hpp"

namespace propinfer {

using nlohmann::json;

std::string to_string(Mode m) {
    return m == Mode::QAMode ? "qa" : "cc";
}

Mode mode_from_string(const std::string& s) {
    if (s == "qa") return Mode::QAMode;
    if (s == "cc") return Mode::ChatCompletionMode;
    throw Error("unknown mode '" + s + "' (expected qa or cc)");
}

void VocabSpec::validate() const {
    if (neutral_words.empty()) throw InvalidVocab("neutral_words must be nonempty");
    if (!(boost > 0.0 && boost <= 1.0)) throw InvalidVocab("boost must be in (0,1]");
    const std::vector<const std::vector<std::string>*> lists{
        &neutral_words, &x_signal_pos, &x_signal_neg, &y_signal_pos, &y_signal_neg};
    std::unordered_set<std::string> seen;
    for (const auto* list : lists) {
        std::unordered_set<std::string> in_list;
        for (const auto& w : *list) {
            if (w.empty()) throw InvalidVocab("empty word in vocab");
            if (!in_list.insert(w).second) throw InvalidVocab("duplicate word '" + w + "'");
            if (!seen.insert(w).second)
                throw InvalidVocab("word '" + w + "' appears in two vocab classes");
        }
    }
}

double SyntheticModel::SideDist::prob(const std::string& w, bool b) const {
    auto it = index.find(w);
    if (it == index.end()) return 0.0;
    return b ? p_pos[it->second] : p_neg[it->second];
}

SyntheticModel::SideDist SyntheticModel::make_side(const std::vector<std::string>& pos,
                                                   const std::vector<std::string>& neg,
                                                   bool property_agnostic) const {
    SideDist d;
    d.words = vocab_.neutral_words;
    d.words.insert(d.words.end(), pos.begin(), pos.end());
    d.words.insert(d.words.end(), neg.begin(), neg.end());
    for (std::size_t i = 0; i < d.words.size(); ++i) d.index.emplace(d.words[i], i);

    auto fill = [&](std::vector<double>& p, const std::vector<std::string>& active) {
        p.assign(d.words.size(), 0.0);
        if (property_agnostic) {
            // the elicited, non-memorized distribution: uniform over the whole
            // side universe, signal words included symmetrically
            std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(d.words.size()));
            return;
        }
        std::size_t n_neutral = vocab_.neutral_words.size();
        if (active.empty()) {
            for (std::size_t i = 0; i < n_neutral; ++i)
                p[i] = 1.0 / static_cast<double>(n_neutral);
            return;
        }
        for (std::size_t i = 0; i < n_neutral; ++i)
            p[i] = (1.0 - vocab_.boost) / static_cast<double>(n_neutral);
        for (const auto& w : active)
            p[d.index.at(w)] = vocab_.boost / static_cast<double>(active.size());
    };
    fill(d.p_pos, pos);
    fill(d.p_neg, neg);

    auto cumulate = [](const std::vector<double>& p) {
        std::vector<double> cdf(p.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
        if (!cdf.empty()) cdf.back() = 1.0;
        return cdf;
    };
    d.cdf_pos = cumulate(d.p_pos);
    d.cdf_neg = cumulate(d.p_neg);
    return d;
}

SyntheticModel::SyntheticModel(double ratio, Mode mode, VocabSpec vocab, std::size_t sample_len,
                               std::uint64_t seed)
    : ratio_(ratio), mode_(mode), vocab_(std::move(vocab)), sample_len_(sample_len), seed_(seed) {
    if (ratio_ < 0.0 || ratio_ > 1.0) throw Error("ratio must be in [0,1]");
    if (sample_len_ < 1) throw Error("sample_len must be >= 1");
    vocab_.validate();
    // QAMode never memorizes the input side; elicitation yields the
    // property-agnostic distribution regardless of the latent bit.
    x_ = make_side(vocab_.x_signal_pos, vocab_.x_signal_neg, mode_ == Mode::QAMode);
    y_ = make_side(vocab_.y_signal_pos, vocab_.y_signal_neg, false);
}

std::string SyntheticModel::id() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "synth-%s-r%.4f-s%llu", to_string(mode_).c_str(), ratio_,
                  static_cast<unsigned long long>(seed_));
    return buf;
}

const std::string& SyntheticModel::sample_token(const SideDist& d, bool b, SplitRng& rng) const {
    const auto& cdf = b ? d.cdf_pos : d.cdf_neg;
    double u = rng.next_unit();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                          d.words.size() - 1);
    return d.words[i];
}

std::vector<Sample> SyntheticModel::generate_samples(std::size_t n, std::uint64_t seed) const {
    std::vector<Sample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitRng rng(mix_seed(seed_, seed, i));
        bool b = rng.bernoulli(ratio_);
        Sample& s = out[i];
        std::string& x = s.input;
        std::string& y = s.output;
        for (std::size_t t = 0; t < sample_len_; ++t) {
            if (t) x.push_back(' ');
            x += sample_token(x_, b, rng);
        }
        for (std::size_t t = 0; t < sample_len_; ++t) {
            if (t) y.push_back(' ');
            y += sample_token(y_, b, rng);
        }
    }
    return out;
}

std::vector<std::string> SyntheticModel::generate(const std::string& prompt, std::size_t n,
                                                  const DecodeParams&, std::uint64_t seed) {
    auto samples = generate_samples(n, mix_seed(seed, hash_text(prompt)));
    std::vector<std::string> texts;
    texts.reserve(n);
    for (auto& s : samples) texts.push_back(s.input + " " + s.output);
    return texts;
}

double SyntheticModel::exact_token_logprob(const std::string& token, Side side) const {
    const SideDist& d = side == Side::Input ? x_ : y_;
    if (!d.index.count(token)) {
        // tolerate cross-side vocabulary: words of the other side have
        // probability zero here but are still known to the model
        const SideDist& other = side == Side::Input ? y_ : x_;
        if (!other.index.count(token)) throw UnknownWord(token);
    }
    double p = ratio_ * d.prob(token, true) + (1.0 - ratio_) * d.prob(token, false);
    return std::log(p);
}

std::optional<std::vector<double>> SyntheticModel::token_logprobs(const std::string& text) {
    auto tokens = tokenize(text);
    std::vector<double> out;
    out.reserve(tokens.size());
    // position rule: the first sample_len tokens score as input-side
    for (std::size_t i = 0; i < tokens.size(); ++i)
        out.push_back(exact_token_logprob(tokens[i], i < sample_len_ ? Side::Input : Side::Output));
    return out;
}

double SyntheticModel::expected_containment(const std::string& word) const {
    if (!x_.index.count(word) && !y_.index.count(word)) throw UnknownWord(word);
    auto miss = [&](bool b) {
        double keep_x = std::pow(1.0 - x_.prob(word, b), static_cast<double>(sample_len_));
        double keep_y = std::pow(1.0 - y_.prob(word, b), static_cast<double>(sample_len_));
        return keep_x * keep_y;
    };
    double c1 = 1.0 - miss(true);
    double c0 = 1.0 - miss(false);
    return ratio_ * c1 + (1.0 - ratio_) * c0;
}

json SyntheticModel::to_json() const {
    return json{{"ratio", ratio_},
                {"mode", to_string(mode_)},
                {"sample_len", sample_len_},
                {"seed", seed_},
                {"vocab",
                 {{"neutral_words", vocab_.neutral_words},
                  {"x_signal_pos", vocab_.x_signal_pos},
                  {"x_signal_neg", vocab_.x_signal_neg},
                  {"y_signal_pos", vocab_.y_signal_pos},
                  {"y_signal_neg", vocab_.y_signal_neg},
                  {"boost", vocab_.boost}}}};
}

std::shared_ptr<SyntheticModel> SyntheticModel::from_json(const json& j) {
    VocabSpec v;
    const auto& jv = j.at("vocab");
    v.neutral_words = jv.at("neutral_words").get<std::vector<std::string>>();
    v.x_signal_pos = jv.value("x_signal_pos", std::vector<std::string>{});
    v.x_signal_neg = jv.value("x_signal_neg", std::vector<std::string>{});
    v.y_signal_pos = jv.value("y_signal_pos", std::vector<std::string>{});
    v.y_signal_neg = jv.value("y_signal_neg", std::vector<std::string>{});
    v.boost = jv.value("boost", 0.5);
    return build_generator(j.at("ratio").get<double>(), mode_from_string(j.at("mode")),
                           v, j.at("sample_len").get<std::size_t>(),
                           j.at("seed").get<std::uint64_t>());
}

std::shared_ptr<SyntheticModel> build_generator(double ratio, Mode mode, const VocabSpec& vocab,
                                                std::size_t sample_len, std::uint64_t seed) {
    return std::make_shared<SyntheticModel>(ratio, mode, vocab, sample_len, seed);
}

ModelEndpoint synthetic_endpoint(std::shared_ptr<SyntheticModel> model) {
    ModelEndpoint ep;
    ep.model = std::move(model);
    return ep;
}

VocabSpec default_lab_vocab(bool x_only) {
    VocabSpec v;
    v.neutral_words.reserve(100);
    for (int i = 0; i < 100; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "w%03d", i);
        v.neutral_words.emplace_back(buf);
    }
    v.x_signal_pos = {"female", "pregnant", "her"};
    v.x_signal_neg = {"male", "his", "son"};
    if (!x_only) {
        v.y_signal_pos = {"estrogen", "gynecology", "obstetric"};
        v.y_signal_neg = {"testosterone", "prostate", "andrology"};
    }
    v.boost = 0.5;
    return v;
}

PropertySpec lab_property(const VocabSpec& vocab, const std::string& name) {
    PropertySpec p;
    p.name = name;
    p.positive_keywords = vocab.x_signal_pos;
    p.positive_keywords.insert(p.positive_keywords.end(), vocab.y_signal_pos.begin(),
                               vocab.y_signal_pos.end());
    p.negative_keywords = vocab.x_signal_neg;
    p.negative_keywords.insert(p.negative_keywords.end(), vocab.y_signal_neg.begin(),
                               vocab.y_signal_neg.end());
    p.target_side = TargetSide::BothSides;
    return p;
}

}  // namespace propinfer
