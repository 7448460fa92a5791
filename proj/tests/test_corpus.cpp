#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "propinfer/corpus.hpp"
#include "propinfer/errors.hpp"

using namespace propinfer;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

LabeledDataset make_pool(std::size_t ones, std::size_t zeros, const std::string& prop = "p") {
    LabeledDataset ds;
    for (std::size_t i = 0; i < ones + zeros; ++i) {
        Sample s;
        s.input = "sample " + std::to_string(i);
        s.output = "out " + std::to_string(i);
        s.labels[prop] = i < ones ? LabelValue::One : LabelValue::Zero;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("tokenize lowers, splits on non-alphanumeric, drops empties") {
    CHECK(tokenize("Hi, ChatDoctor!") == std::vector<std::string>{"hi", "chatdoctor"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("a-b a") == std::vector<std::string>{"a", "b", "a"});
}

TEST_CASE("load_jsonl basic counting and round-trip") {
    auto path = temp_path("corpus_basic.jsonl");
    {
        std::ofstream out(path);
        out << R"({"instruction":"i","input":"hello","output":"world"})" << "\n";
        out << R"({"input":"a","output":"b","labels":{"gender":1,"other":"na"}})" << "\n";
    }
    auto ds = load_jsonl(path);
    REQUIRE(ds.samples.size() == 2);
    CHECK(ds.samples[0].instruction == "i");
    CHECK(ds.samples[1].labels.at("gender") == LabelValue::One);
    CHECK(ds.samples[1].labels.at("other") == LabelValue::NotApplicable);

    auto path2 = temp_path("corpus_roundtrip.jsonl");
    save_jsonl(ds, path2);
    auto ds2 = load_jsonl(path2);
    CHECK(ds2.samples == ds.samples);

    // serialization is byte-stable
    auto path3 = temp_path("corpus_roundtrip2.jsonl");
    save_jsonl(ds2, path3);
    CHECK(file_bytes(path2) == file_bytes(path3));
}

TEST_CASE("load_jsonl error contracts") {
    auto path = temp_path("corpus_bad.jsonl");
    {
        std::ofstream out(path);
        out << R"({"input":"a","output":"b"})" << "\n";
        out << R"({"input":"a","output":"b"})" << "\n";
        out << "not json\n";
    }
    CHECK_THROWS_AS(load_jsonl(path), MalformedLine);
    try {
        load_jsonl(path);
    } catch (const MalformedLine& e) {
        CHECK(e.line_no == 3);
    }

    {
        std::ofstream out(path);
        out << R"({"input":"a"})" << "\n";
    }
    CHECK_THROWS_AS(load_jsonl(path), MissingField);
}

TEST_CASE("reserved label: prefix folds into labels") {
    auto path = temp_path("corpus_prefix.jsonl");
    {
        std::ofstream out(path);
        out << R"({"input":"a","output":"b","label:gender":0,"ignored":"x"})" << "\n";
    }
    auto ds = load_jsonl(path);
    CHECK(ds.samples[0].labels.at("gender") == LabelValue::Zero);
    CHECK(ds.samples[0].labels.size() == 1);
}

TEST_CASE("keyword_label decision table") {
    PropertySpec spec;
    spec.name = "gender";
    spec.positive_keywords = {"pregnant", "female"};
    spec.negative_keywords = {"son", "male"};

    CHECK(keyword_label("I am pregnant and worried", spec) == LabelValue::One);
    CHECK(keyword_label("my son has fever", spec) == LabelValue::Zero);
    spec.positive_keywords = {"daughter"};
    spec.negative_keywords = {"son"};
    CHECK(keyword_label("my daughter and my son are both sick", spec) ==
          LabelValue::NotApplicable);
    CHECK(keyword_label("nothing relevant here", spec) == LabelValue::NotApplicable);
}

TEST_CASE("keyword_label is invariant to case and punctuation") {
    PropertySpec spec;
    spec.name = "p";
    spec.positive_keywords = {"female"};
    spec.negative_keywords = {"male"};
    CHECK(keyword_label("FEMALE", spec) == LabelValue::One);
    CHECK(keyword_label("...female!!!", spec) == LabelValue::One);
    CHECK(keyword_label("(Male)", spec) == LabelValue::Zero);
    // whole-word only: "female" must not match inside "males" and vice versa
    CHECK(keyword_label("males", spec) == LabelValue::NotApplicable);
}

TEST_CASE("true_ratio arithmetic") {
    auto ds = make_pool(3, 1);
    CHECK(true_ratio(ds, "p") == doctest::Approx(0.75));

    // corpus-scale anchor: 19206 / (19206 + 10585)
    auto big = make_pool(19206, 10585);
    CHECK(true_ratio(big, "p") == doctest::Approx(19206.0 / 29791.0).epsilon(1e-12));

    LabeledDataset na;
    Sample s;
    s.labels["p"] = LabelValue::NotApplicable;
    na.samples.push_back(s);
    CHECK_THROWS_AS(true_ratio(na, "p"), NoLabeledSamples);
}

TEST_CASE("true_ratio complement symmetry") {
    auto ds = make_pool(7, 13);
    for (auto& s : ds.samples) {
        auto v = s.labels.at("p");
        s.labels["q"] = v == LabelValue::One ? LabelValue::Zero : LabelValue::One;
    }
    CHECK(true_ratio(ds, "p") == doctest::Approx(1.0 - true_ratio(ds, "q")).epsilon(1e-12));
}

TEST_CASE("subsample_to_ratio counts and errors") {
    auto ds = make_pool(10, 10);
    auto sub = subsample_to_ratio(ds, "p", 0.3, 10, 42);
    std::size_t ones = 0;
    for (const auto& s : sub.samples)
        if (s.labels.at("p") == LabelValue::One) ++ones;
    CHECK(sub.samples.size() == 10);
    CHECK(ones == 3);

    CHECK_THROWS_AS(subsample_to_ratio(ds, "p", 0.95, 20, 42), InfeasibleRatio);
}

TEST_CASE("subsample_to_ratio determinism is byte-identical") {
    auto ds = make_pool(50, 50);
    auto a = subsample_to_ratio(ds, "p", 0.4, 30, 7);
    auto b = subsample_to_ratio(ds, "p", 0.4, 30, 7);
    auto pa = temp_path("sub_a.jsonl"), pb = temp_path("sub_b.jsonl");
    save_jsonl(a, pa);
    save_jsonl(b, pb);
    CHECK(file_bytes(pa) == file_bytes(pb));

    auto c = subsample_to_ratio(ds, "p", 0.4, 30, 8);
    CHECK(c.samples != a.samples);  // different seed, different draw
}

TEST_CASE("subsample achieves round(r*n)/n exactly over random feasible pairs") {
    auto ds = make_pool(300, 300);
    std::uint64_t seed = 1;
    for (int trial = 0; trial < 50; ++trial) {
        double r = (trial * 37 % 101) / 100.0;
        std::size_t n = 1 + (trial * 13) % 200;
        auto n_one = static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 0.5));
        auto sub = subsample_to_ratio(ds, "p", r, n, seed++);
        std::size_t ones = 0;
        for (const auto& s : sub.samples)
            if (s.labels.at("p") == LabelValue::One) ++ones;
        CHECK(ones == n_one);
        CHECK(sub.samples.size() == n);
    }
}

TEST_CASE("subsample with replacement allows small pools") {
    auto ds = make_pool(1, 1);
    auto sub = subsample_to_ratio(ds, "p", 0.5, 10, 3, /*with_replacement=*/true);
    CHECK(sub.samples.size() == 10);
    std::size_t ones = 0;
    for (const auto& s : sub.samples)
        if (s.labels.at("p") == LabelValue::One) ++ones;
    CHECK(ones == 5);
}

TEST_CASE("PropertySpec validation") {
    PropertySpec spec;
    spec.name = "p";
    spec.positive_keywords = {"a"};
    spec.negative_keywords = {"a"};
    CHECK_THROWS_AS(spec.validate(), Error);

    spec.negative_keywords = {"b"};
    spec.classifier_prompt = "no placeholder";
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.classifier_prompt = "classify: {text}";
    CHECK_NOTHROW(spec.validate());
}
