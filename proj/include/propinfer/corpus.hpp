#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace propinfer {

enum class LabelValue { One, Zero, NotApplicable };

/// Lowercase, split on any non-alphanumeric byte, drop empties. No stemming.
std::vector<std::string> tokenize(const std::string& text);

/// One instruction/input/output record. `input` is the patient-side content,
/// `output` the doctor-side content.
struct Sample {
    std::string instruction;
    std::string input;
    std::string output;
    std::map<std::string, LabelValue> labels;

    bool operator==(const Sample&) const = default;
};

struct LabeledDataset {
    std::vector<Sample> samples;
    std::string source;
};

enum class TargetSide { InputSide, OutputSide, BothSides };

/// A named binary property with keyword labeling rules and an optional
/// remote-classifier prompt template (must contain exactly one `{text}`).
struct PropertySpec {
    std::string name;
    std::vector<std::string> positive_keywords;
    std::vector<std::string> negative_keywords;
    std::optional<std::string> classifier_prompt;
    TargetSide target_side = TargetSide::BothSides;

    void validate() const;
    /// The side of a sample this property is read from.
    std::string side_text(const Sample& s) const;
};

/// Reserved prefix: top-level JSONL keys "label:<name>" fold into labels.
inline constexpr const char* kLabelKeyPrefix = "label:";

LabeledDataset load_jsonl(const std::string& path);
void save_jsonl(const LabeledDataset& dataset, const std::string& path);

/// One if >=1 positive keyword and 0 negative ones, Zero for the reverse,
/// NotApplicable otherwise (none present, or both classes present).
/// Case-insensitive on whole word tokens.
LabelValue keyword_label(const std::string& text, const PropertySpec& spec);

/// Apply keyword_label to every sample's relevant side, writing spec.name labels.
void label_dataset(LabeledDataset& dataset, const PropertySpec& spec);

/// (#One) / (#One + #Zero) over samples labeled for `property`.
/// Throws NoLabeledSamples when the denominator is zero.
double true_ratio(const LabeledDataset& dataset, const std::string& property);

/// Exactly `size` samples with round-half-up(target_ratio * size) One labels,
/// remainder Zero; uniform without replacement within each class (with
/// replacement when the flag is set); order shuffled. Deterministic under seed.
LabeledDataset subsample_to_ratio(const LabeledDataset& dataset, const std::string& property,
                                  double target_ratio, std::size_t size, std::uint64_t seed,
                                  bool with_replacement = false);

}  // namespace propinfer
