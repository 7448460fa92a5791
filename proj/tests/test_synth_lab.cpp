#include <doctest.h>

#include <cmath>
#include <unordered_set>

#include "propinfer/errors.hpp"
#include "propinfer/synth_lab.hpp"

using namespace propinfer;

namespace {

VocabSpec tiny_vocab() {
    VocabSpec v;
    v.neutral_words = {"alpha", "beta", "gamma", "delta"};
    v.x_signal_pos = {"xp"};
    v.x_signal_neg = {"xn"};
    v.y_signal_pos = {"yp"};
    v.y_signal_neg = {"yn"};
    v.boost = 0.5;
    return v;
}

VocabSpec uniform_vocab(int k) {
    VocabSpec v;
    for (int i = 0; i < k; ++i) v.neutral_words.push_back("u" + std::to_string(i));
    return v;
}

bool contains_any(const std::string& text, const std::vector<std::string>& words) {
    auto tokens = tokenize(text);
    std::unordered_set<std::string> set(tokens.begin(), tokens.end());
    for (const auto& w : words)
        if (set.count(w)) return true;
    return false;
}

}  // namespace

TEST_CASE("vocab validation rejects overlaps and bad boost") {
    auto v = tiny_vocab();
    v.x_signal_pos.push_back("alpha");
    CHECK_THROWS_AS(build_generator(0.5, Mode::ChatCompletionMode, v, 5, 1), InvalidVocab);

    v = tiny_vocab();
    v.boost = 0.0;
    CHECK_THROWS_AS(build_generator(0.5, Mode::ChatCompletionMode, v, 5, 1), InvalidVocab);

    v = tiny_vocab();
    v.neutral_words.clear();
    CHECK_THROWS_AS(build_generator(0.5, Mode::ChatCompletionMode, v, 5, 1), InvalidVocab);
}

TEST_CASE("ratio 0 generator never emits a pos-signal word in chat-completion mode") {
    auto gen = build_generator(0.0, Mode::ChatCompletionMode, tiny_vocab(), 8, 11);
    auto ep = synthetic_endpoint(gen);
    auto set = generate_batch(ep, "q", 500, 3);
    for (const auto& text : set.texts) CHECK_FALSE(contains_any(text, {"xp", "yp"}));
}

TEST_CASE("determinism: same config and seed give identical streams") {
    auto a = build_generator(0.4, Mode::QAMode, tiny_vocab(), 6, 99);
    auto b = build_generator(0.4, Mode::QAMode, tiny_vocab(), 6, 99);
    auto ta = a->generate("p", 50, {}, 7);
    auto tb = b->generate("p", 50, {}, 7);
    CHECK(ta == tb);
    CHECK(a->generate("p", 50, {}, 8) != ta);
}

TEST_CASE("normalization: token probabilities sum to 1 per side and bit") {
    for (Mode mode : {Mode::QAMode, Mode::ChatCompletionMode}) {
        auto gen = build_generator(0.3, mode, tiny_vocab(), 5, 5);
        for (Side side : {Side::Input, Side::Output}) {
            const auto& words = side == Side::Input
                                    ? std::vector<std::string>{"alpha", "beta", "gamma", "delta",
                                                               "xp", "xn"}
                                    : std::vector<std::string>{"alpha", "beta", "gamma", "delta",
                                                               "yp", "yn"};
            double sum = 0.0;
            for (const auto& w : words) sum += std::exp(gen->exact_token_logprob(w, side));
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("expected_containment closed form") {
    // single-sided signal with p = 0.1 and L = 10 at ratio 1
    VocabSpec v;
    v.neutral_words = {"n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8", "n9"};
    v.y_signal_pos = {"yp"};
    v.y_signal_neg = {"yn"};
    v.boost = 0.1;
    auto gen = build_generator(1.0, Mode::ChatCompletionMode, v, 10, 1);
    CHECK(gen->expected_containment("yp") == doctest::Approx(0.6513215599).epsilon(1e-9));

    // neutral word with equal probability under both bits: containment flat in r
    auto g1 = build_generator(0.2, Mode::ChatCompletionMode, v, 10, 1);
    auto g2 = build_generator(0.9, Mode::ChatCompletionMode, v, 10, 1);
    CHECK(g1->expected_containment("n1") ==
          doctest::Approx(g2->expected_containment("n1")).epsilon(1e-12));

    CHECK_THROWS_AS(gen->expected_containment("nonexistent"), UnknownWord);
}

TEST_CASE("mode asymmetry: QA x-signal containment constant, CC strictly increasing") {
    auto v = tiny_vocab();
    double prev_qa = -1.0, prev_cc = -1.0;
    bool first = true;
    for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto qa = build_generator(r, Mode::QAMode, v, 10, 1);
        auto cc = build_generator(r, Mode::ChatCompletionMode, v, 10, 1);
        double cqa = qa->expected_containment("xp");
        double ccc = cc->expected_containment("xp");
        if (!first) {
            CHECK(cqa == prev_qa);  // exactly constant in r
            CHECK(ccc > prev_cc);
        }
        prev_qa = cqa;
        prev_cc = ccc;
        first = false;
    }
}

TEST_CASE("Monte-Carlo containment matches the oracle within 4 sigma") {
    auto v = tiny_vocab();
    v.boost = 0.3;
    const std::size_t N = 10000;
    auto gen = build_generator(0.5, Mode::ChatCompletionMode, v, 5, 21);
    auto ep = synthetic_endpoint(gen);
    auto set = generate_batch(ep, "mc", N, 17);
    for (const std::string word : {"xp", "xn", "yp", "yn"}) {
        double mu = gen->expected_containment(word);
        std::size_t hits = 0;
        for (const auto& text : set.texts)
            if (contains_any(text, {word})) ++hits;
        double empirical = static_cast<double>(hits) / static_cast<double>(N);
        double tol = 4.0 * std::sqrt(mu * (1.0 - mu) / static_cast<double>(N));
        CHECK(std::abs(empirical - mu) <= tol);
    }
}

TEST_CASE("exact_token_logprob mixture arithmetic") {
    auto v = uniform_vocab(8);
    auto gen = build_generator(0.5, Mode::ChatCompletionMode, v, 4, 2);
    CHECK(gen->exact_token_logprob("u3", Side::Input) ==
          doctest::Approx(std::log(1.0 / 8.0)).epsilon(1e-12));

    // r = 0.5, p1 = 0.2, p0 = 0 for the pos-signal word with boost 0.2
    VocabSpec sv;
    sv.neutral_words = {"a", "b", "c", "d"};
    sv.y_signal_pos = {"yp"};
    sv.y_signal_neg = {"yn"};
    sv.boost = 0.2;
    auto sg = build_generator(0.5, Mode::ChatCompletionMode, sv, 4, 2);
    CHECK(sg->exact_token_logprob("yp", Side::Output) ==
          doctest::Approx(std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("perplexity oracle: scoring equals exp of negative mean exact logprob") {
    auto v = tiny_vocab();
    auto gen = build_generator(0.35, Mode::ChatCompletionMode, v, 6, 9);
    auto ep = synthetic_endpoint(gen);
    auto texts = gen->generate("p", 20, {}, 4);
    for (const auto& text : texts) {
        auto tokens = tokenize(text);
        double sum = 0.0;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            sum += gen->exact_token_logprob(tokens[i], i < 6 ? Side::Input : Side::Output);
        double expected = std::exp(-sum / static_cast<double>(tokens.size()));
        CHECK(sequence_perplexity(ep, text) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("QA-mode generations carry both signal classes at symmetric rates") {
    auto gen = build_generator(0.0, Mode::QAMode, tiny_vocab(), 20, 13);
    auto set = generate_batch(synthetic_endpoint(gen), "q", 2000, 5);
    std::size_t pos = 0, neg = 0;
    for (const auto& text : set.texts) {
        if (contains_any(text, {"xp"})) ++pos;
        if (contains_any(text, {"xn"})) ++neg;
    }
    CHECK(pos > 0);  // elicited input side is property-agnostic, not signal-free
    CHECK(std::abs(static_cast<double>(pos) - static_cast<double>(neg)) <
          4.0 * std::sqrt(static_cast<double>(pos + neg)));
}

TEST_CASE("generator config JSON round-trip") {
    auto gen = build_generator(0.65, Mode::QAMode, tiny_vocab(), 7, 123);
    auto j = gen->to_json();
    auto back = SyntheticModel::from_json(j);
    CHECK(back->ratio() == gen->ratio());
    CHECK(back->mode() == gen->mode());
    CHECK(back->generate("p", 10, {}, 3) == gen->generate("p", 10, {}, 3));
}
