#include "propinfer/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "propinfer/errors.hpp"
#include "propinfer/rng.hpp"

namespace propinfer {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

void PropertySpec::validate() const {
    std::unordered_set<std::string> pos(positive_keywords.begin(), positive_keywords.end());
    for (const auto& w : negative_keywords) {
        if (pos.count(w))
            throw Error("property '" + name + "': keyword '" + w + "' in both classes");
    }
    if (classifier_prompt) {
        auto first = classifier_prompt->find("{text}");
        if (first == std::string::npos ||
            classifier_prompt->find("{text}", first + 1) != std::string::npos)
            throw Error("property '" + name + "': classifier_prompt needs exactly one {text}");
    }
}

std::string PropertySpec::side_text(const Sample& s) const {
    switch (target_side) {
        case TargetSide::InputSide: return s.input;
        case TargetSide::OutputSide: return s.output;
        case TargetSide::BothSides: return s.input + " " + s.output;
    }
    return {};
}

namespace {

LabelValue label_from_json(const json& v) {
    if (v.is_number_integer()) {
        if (v.get<int>() == 1) return LabelValue::One;
        if (v.get<int>() == 0) return LabelValue::Zero;
    } else if (v.is_string() && v.get<std::string>() == "na") {
        return LabelValue::NotApplicable;
    }
    throw Error("label value must be 0, 1 or \"na\"");
}

json label_to_json(LabelValue v) {
    switch (v) {
        case LabelValue::One: return 1;
        case LabelValue::Zero: return 0;
        case LabelValue::NotApplicable: return "na";
    }
    return "na";
}

}  // namespace

LabeledDataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    LabeledDataset ds;
    ds.source = path;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error&) {
            throw MalformedLine(line_no);
        }
        if (!obj.is_object()) throw MalformedLine(line_no);
        if (!obj.contains("input")) throw MissingField(line_no, "input");
        if (!obj.contains("output")) throw MissingField(line_no, "output");
        Sample s;
        s.instruction = obj.value("instruction", std::string{});
        s.input = obj.at("input").get<std::string>();
        s.output = obj.at("output").get<std::string>();
        try {
            if (obj.contains("labels")) {
                for (const auto& [k, v] : obj.at("labels").items())
                    s.labels[k] = label_from_json(v);
            }
            for (const auto& [k, v] : obj.items()) {
                if (k.starts_with(kLabelKeyPrefix))
                    s.labels[k.substr(std::string(kLabelKeyPrefix).size())] = label_from_json(v);
            }
        } catch (const Error&) {
            throw MalformedLine(line_no);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void save_jsonl(const LabeledDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& s : dataset.samples) {
        json obj;
        obj["instruction"] = s.instruction;
        obj["input"] = s.input;
        obj["output"] = s.output;
        if (!s.labels.empty()) {
            json labels = json::object();
            for (const auto& [k, v] : s.labels) labels[k] = label_to_json(v);
            obj["labels"] = labels;
        }
        out << obj.dump() << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

LabelValue keyword_label(const std::string& text, const PropertySpec& spec) {
    std::unordered_set<std::string> tokens;
    for (auto& t : tokenize(text)) tokens.insert(std::move(t));
    auto any_hit = [&](const std::vector<std::string>& words) {
        return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
            std::string lw;
            lw.reserve(w.size());
            for (unsigned char c : w) lw.push_back(static_cast<char>(std::tolower(c)));
            return tokens.count(lw) > 0;
        });
    };
    bool pos = any_hit(spec.positive_keywords);
    bool neg = any_hit(spec.negative_keywords);
    if (pos && !neg) return LabelValue::One;
    if (neg && !pos) return LabelValue::Zero;
    return LabelValue::NotApplicable;
}

void label_dataset(LabeledDataset& dataset, const PropertySpec& spec) {
    for (auto& s : dataset.samples) s.labels[spec.name] = keyword_label(spec.side_text(s), spec);
}

double true_ratio(const LabeledDataset& dataset, const std::string& property) {
    std::size_t ones = 0, zeros = 0;
    for (const auto& s : dataset.samples) {
        auto it = s.labels.find(property);
        if (it == s.labels.end()) continue;
        if (it->second == LabelValue::One) ++ones;
        else if (it->second == LabelValue::Zero) ++zeros;
    }
    if (ones + zeros == 0) throw NoLabeledSamples(property);
    return static_cast<double>(ones) / static_cast<double>(ones + zeros);
}

LabeledDataset subsample_to_ratio(const LabeledDataset& dataset, const std::string& property,
                                  double target_ratio, std::size_t size, std::uint64_t seed,
                                  bool with_replacement) {
    std::vector<std::size_t> ones, zeros;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        auto it = dataset.samples[i].labels.find(property);
        if (it == dataset.samples[i].labels.end()) continue;
        if (it->second == LabelValue::One) ones.push_back(i);
        else if (it->second == LabelValue::Zero) zeros.push_back(i);
    }
    // Half-up rounding makes the achieved ratio a pure function of (r, n).
    auto n_one = static_cast<std::size_t>(std::floor(target_ratio * static_cast<double>(size) + 0.5));
    if (n_one > size) n_one = size;
    std::size_t n_zero = size - n_one;
    if (!with_replacement && (n_one > ones.size() || n_zero > zeros.size()))
        throw InfeasibleRatio(n_one, ones.size(), n_zero, zeros.size());
    if (with_replacement && ((n_one > 0 && ones.empty()) || (n_zero > 0 && zeros.empty())))
        throw InfeasibleRatio(n_one, ones.size(), n_zero, zeros.size());

    SplitRng rng(mix_seed(seed, hash_text(property)));
    std::vector<std::size_t> chosen;
    chosen.reserve(size);
    auto draw = [&](std::vector<std::size_t>& pool, std::size_t k) {
        if (with_replacement) {
            for (std::size_t i = 0; i < k; ++i)
                chosen.push_back(pool[rng.uniform_below(pool.size())]);
        } else {
            // partial Fisher-Yates: first k entries are a uniform k-subset
            for (std::size_t i = 0; i < k; ++i) {
                std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(pool.size() - i));
                std::swap(pool[i], pool[j]);
                chosen.push_back(pool[i]);
            }
        }
    };
    draw(ones, n_one);
    draw(zeros, n_zero);
    rng.shuffle(chosen);

    LabeledDataset out;
    out.source = dataset.source + "#subsample";
    out.samples.reserve(size);
    for (std::size_t i : chosen) out.samples.push_back(dataset.samples[i]);
    return out;
}

}  // namespace propinfer
