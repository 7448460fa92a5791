#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "propinfer/gateway.hpp"

namespace propinfer {

/// Sorted, deduplicated, lowercase word list.
struct Vocabulary {
    std::vector<std::string> words;

    std::size_t size() const { return words.size(); }
    /// Index of word, or npos when absent.
    std::size_t index_of(const std::string& word) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Union of all tokens appearing in any text of any set, sorted.
Vocabulary build_vocabulary(const std::vector<GenerationSet>& generation_sets);

/// Rows = models, columns = vocabulary words, entries = containment
/// frequencies in [0,1].
struct FrequencyMatrix {
    std::vector<std::string> model_ids;
    Vocabulary vocab;
    Eigen::MatrixXd values;

    void save_csv(const std::string& path) const;  // 9 significant digits
    static FrequencyMatrix load_csv(const std::string& path);
};

/// Fraction of texts whose token set contains `word` (containment, not count).
double containment_frequency(const GenerationSet& set, const std::string& word);

/// Containment of every vocabulary word over one set, in vocab order.
Eigen::VectorXd containment_frequencies(const GenerationSet& set, const Vocabulary& vocab,
                                        bool use_counts = false);

/// Per word, unweighted mean of per-prompt containment frequencies.
Eigen::VectorXd prompt_averaged_frequencies(const std::map<std::string, GenerationSet>& per_prompt,
                                            const Vocabulary& vocab, bool use_counts = false);

/// Univariate regression F-statistic: with Pearson correlation rho,
/// F = rho^2/(1-rho^2) * (m-2). Zero variance on either side gives 0;
/// |rho| = 1 gives +inf.
double f_statistic(const Eigen::VectorXd& feature, const Eigen::VectorXd& targets);

struct KeywordSelection {
    std::vector<std::string> keywords;  // descending F; ties lexicographic
    std::vector<double> f_scores;       // nonincreasing; +inf reported as-is
};

/// Top-d columns by F-statistic against the ratios (all columns when
/// d >= |vocab|). Deterministic: ties break by lexicographic word order.
KeywordSelection select_keywords(const FrequencyMatrix& matrix, const Eigen::VectorXd& ratios,
                                 std::size_t d);

/// Restrict a matrix's columns to the selected keywords, in selection order.
Eigen::MatrixXd restrict_to_keywords(const FrequencyMatrix& matrix,
                                     const KeywordSelection& selection);
Eigen::VectorXd restrict_to_keywords(const Eigen::VectorXd& features, const Vocabulary& vocab,
                                     const KeywordSelection& selection);

/// Mean sequence perplexity of the endpoint over the two extreme holdouts
/// (s0 all-Zero labeled, s1 all-One labeled for `property`); per sample the
/// scored text is input + " " + output.
Eigen::Vector2d perplexity_features(const ModelEndpoint& endpoint, const std::string& property,
                                    const LabeledDataset& s0, const LabeledDataset& s1);

}  // namespace propinfer
