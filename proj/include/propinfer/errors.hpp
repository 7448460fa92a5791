#pragma once

#include <stdexcept>
#include <string>

namespace propinfer {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct MalformedLine : Error {
    std::size_t line_no;
    explicit MalformedLine(std::size_t line)
        : Error("malformed JSONL at line " + std::to_string(line)), line_no(line) {}
};
struct MissingField : Error {
    std::size_t line_no;
    std::string field;
    MissingField(std::size_t line, std::string f)
        : Error("missing field '" + f + "' at line " + std::to_string(line)),
          line_no(line), field(std::move(f)) {}
};
struct NoLabeledSamples : Error {
    explicit NoLabeledSamples(const std::string& property)
        : Error("no One/Zero labeled samples for property '" + property + "'") {}
};
struct InfeasibleRatio : Error {
    std::size_t required_one, available_one, required_zero, available_zero;
    InfeasibleRatio(std::size_t req1, std::size_t av1, std::size_t req0, std::size_t av0,
                    std::string context = {})
        : Error(context + "infeasible ratio: need " + std::to_string(req1) + " One (have " +
                std::to_string(av1) + "), " + std::to_string(req0) + " Zero (have " +
                std::to_string(av0) + ")"),
          required_one(req1), available_one(av1), required_zero(req0), available_zero(av0) {}
};

// gateway
struct TransportError : Error {
    using Error::Error;
};
struct ScoringUnsupported : Error {
    ScoringUnsupported() : Error("endpoint does not expose token log-probabilities") {}
};
struct EmptySequence : Error {
    EmptySequence() : Error("text tokenizes to zero tokens") {}
};

// synth-lab
struct InvalidVocab : Error {
    using Error::Error;
};
struct UnknownWord : Error {
    explicit UnknownWord(const std::string& w) : Error("word not in vocab universe: '" + w + "'") {}
};

// gen-attack
struct AllNotApplicable : Error {
    AllNotApplicable() : Error("every label is NotApplicable") {}
};
struct AllPromptsInvalid : Error {
    AllPromptsInvalid() : Error("every prompt yielded only NotApplicable labels") {}
};
struct ParseFailure : Error {
    explicit ParseFailure(const std::string& response)
        : Error("no fraction in [0,1] found in response: '" + response + "'") {}
};

// shadow-features
struct LengthMismatch : Error {
    LengthMismatch(std::size_t a, std::size_t b)
        : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};
struct TooFewSamples : Error {
    explicit TooFewSamples(std::size_t m)
        : Error("need at least 3 samples, got " + std::to_string(m)) {}
};
struct EmptyGenerationSet : Error {
    explicit EmptyGenerationSet(const std::string& what_set)
        : Error("empty generation set: " + what_set) {}
};
struct HoldoutContamination : Error {
    explicit HoldoutContamination(const std::string& detail)
        : Error("holdout contamination: " + detail) {}
};
struct EmptyHoldout : Error {
    EmptyHoldout() : Error("holdout dataset is empty") {}
};

// meta-regressor
struct DimensionMismatch : Error {
    DimensionMismatch(std::size_t got, std::size_t want)
        : Error("feature dimension " + std::to_string(got) + ", expected " + std::to_string(want)) {}
};
struct DegenerateTraining : Error {
    DegenerateTraining() : Error("need at least 2 training rows") {}
};

// shadow-attack
struct ShadowBuildFailed : Error {
    using Error::Error;
};

// bench-harness
struct InapplicableAxis : Error {
    explicit InapplicableAxis(const std::string& axis)
        : Error("ablation axis '" + axis + "' does not apply to the configured attack") {}
};
struct OutOfRange : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace propinfer
