#include "propinfer/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "propinfer/errors.hpp"

namespace propinfer {

std::size_t Vocabulary::index_of(const std::string& word) const {
    auto it = std::lower_bound(words.begin(), words.end(), word);
    if (it == words.end() || *it != word) return npos;
    return static_cast<std::size_t>(it - words.begin());
}

Vocabulary build_vocabulary(const std::vector<GenerationSet>& generation_sets) {
    if (generation_sets.empty()) throw Error("build_vocabulary: need at least one set");
    std::unordered_set<std::string> seen;
    for (const auto& set : generation_sets)
        for (const auto& text : set.texts)
            for (auto& tok : tokenize(text)) seen.insert(std::move(tok));
    Vocabulary v;
    v.words.assign(seen.begin(), seen.end());
    std::sort(v.words.begin(), v.words.end());
    return v;
}

double containment_frequency(const GenerationSet& set, const std::string& word) {
    if (set.texts.empty()) throw EmptyGenerationSet(set.prompt);
    std::size_t hits = 0;
    for (const auto& text : set.texts) {
        auto tokens = tokenize(text);
        if (std::find(tokens.begin(), tokens.end(), word) != tokens.end()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(set.texts.size());
}

Eigen::VectorXd containment_frequencies(const GenerationSet& set, const Vocabulary& vocab,
                                        bool use_counts) {
    if (set.texts.empty()) throw EmptyGenerationSet(set.prompt);
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab.words[i], i);

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    std::unordered_set<std::size_t> in_text;
    for (const auto& text : set.texts) {
        if (use_counts) {
            for (const auto& tok : tokenize(text)) {
                auto it = index.find(tok);
                if (it != index.end()) acc[static_cast<Eigen::Index>(it->second)] += 1.0;
            }
        } else {
            in_text.clear();
            for (const auto& tok : tokenize(text)) {
                auto it = index.find(tok);
                if (it != index.end()) in_text.insert(it->second);
            }
            for (std::size_t i : in_text) acc[static_cast<Eigen::Index>(i)] += 1.0;
        }
    }
    return acc / static_cast<double>(set.texts.size());
}

Eigen::VectorXd prompt_averaged_frequencies(const std::map<std::string, GenerationSet>& per_prompt,
                                            const Vocabulary& vocab, bool use_counts) {
    if (per_prompt.empty()) throw Error("prompt_averaged_frequencies: need at least one prompt");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    for (const auto& [prompt, set] : per_prompt) {
        if (set.texts.empty()) throw EmptyGenerationSet(prompt);
        acc += containment_frequencies(set, vocab, use_counts);
    }
    return acc / static_cast<double>(per_prompt.size());
}

double f_statistic(const Eigen::VectorXd& feature, const Eigen::VectorXd& targets) {
    if (feature.size() != targets.size())
        throw LengthMismatch(static_cast<std::size_t>(feature.size()),
                             static_cast<std::size_t>(targets.size()));
    auto m = feature.size();
    if (m < 3) throw TooFewSamples(static_cast<std::size_t>(m));
    Eigen::VectorXd u = feature.array() - feature.mean();
    Eigen::VectorXd y = targets.array() - targets.mean();
    double sxx = u.squaredNorm();
    double syy = y.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    double sxy = u.dot(y);
    double r2 = (sxy * sxy) / (sxx * syy);
    if (r2 >= 1.0 - 1e-15) return std::numeric_limits<double>::infinity();
    return r2 / (1.0 - r2) * static_cast<double>(m - 2);
}

KeywordSelection select_keywords(const FrequencyMatrix& matrix, const Eigen::VectorXd& ratios,
                                 std::size_t d) {
    if (static_cast<std::size_t>(matrix.values.rows()) != static_cast<std::size_t>(ratios.size()))
        throw LengthMismatch(static_cast<std::size_t>(matrix.values.rows()),
                             static_cast<std::size_t>(ratios.size()));
    if (d < 1) throw Error("select_keywords: d must be >= 1");

    std::size_t n_cols = matrix.vocab.size();
    std::vector<double> scores(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c)
        scores[c] = f_statistic(matrix.values.col(static_cast<Eigen::Index>(c)), ratios);

    std::vector<std::size_t> order(n_cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];  // +inf sorts first
        return matrix.vocab.words[a] < matrix.vocab.words[b];
    });

    KeywordSelection sel;
    std::size_t take = std::min(d, n_cols);
    sel.keywords.reserve(take);
    sel.f_scores.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        sel.keywords.push_back(matrix.vocab.words[order[i]]);
        sel.f_scores.push_back(scores[order[i]]);
    }
    return sel;
}

Eigen::MatrixXd restrict_to_keywords(const FrequencyMatrix& matrix,
                                     const KeywordSelection& selection) {
    Eigen::MatrixXd out(matrix.values.rows(), static_cast<Eigen::Index>(selection.keywords.size()));
    for (std::size_t k = 0; k < selection.keywords.size(); ++k) {
        std::size_t c = matrix.vocab.index_of(selection.keywords[k]);
        if (c == Vocabulary::npos) throw UnknownWord(selection.keywords[k]);
        out.col(static_cast<Eigen::Index>(k)) = matrix.values.col(static_cast<Eigen::Index>(c));
    }
    return out;
}

Eigen::VectorXd restrict_to_keywords(const Eigen::VectorXd& features, const Vocabulary& vocab,
                                     const KeywordSelection& selection) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(selection.keywords.size()));
    for (std::size_t k = 0; k < selection.keywords.size(); ++k) {
        std::size_t c = vocab.index_of(selection.keywords[k]);
        // a keyword the target never produced has containment zero
        out[static_cast<Eigen::Index>(k)] =
            c == Vocabulary::npos ? 0.0 : features[static_cast<Eigen::Index>(c)];
    }
    return out;
}

void FrequencyMatrix::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "model_id";
    for (const auto& w : vocab.words) out << "," << w;
    out << "\n";
    char buf[32];
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out << model_ids.at(static_cast<std::size_t>(r));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", values(r, c));
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

FrequencyMatrix FrequencyMatrix::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path);

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    FrequencyMatrix m;
    auto header = split(line);
    if (header.empty() || header[0] != "model_id") throw IoError("bad CSV header: " + path);
    m.vocab.words.assign(header.begin() + 1, header.end());

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size()) throw IoError("ragged CSV row in " + path);
        m.model_ids.push_back(cells[0]);
        std::vector<double> row;
        row.reserve(cells.size() - 1);
        for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
        rows.push_back(std::move(row));
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(m.vocab.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

Eigen::Vector2d perplexity_features(const ModelEndpoint& endpoint, const std::string& property,
                                    const LabeledDataset& s0, const LabeledDataset& s1) {
    auto check = [&](const LabeledDataset& ds, LabelValue want, const char* which) {
        if (ds.samples.empty()) throw EmptyHoldout();
        for (const auto& s : ds.samples) {
            auto it = s.labels.find(property);
            if (it == s.labels.end() || it->second != want)
                throw HoldoutContamination(std::string(which) + " contains a sample not labeled " +
                                           (want == LabelValue::Zero ? "Zero" : "One") +
                                           " for '" + property + "'");
        }
    };
    check(s0, LabelValue::Zero, "s0");
    check(s1, LabelValue::One, "s1");

    auto mean_ppl = [&](const LabeledDataset& ds) {
        double sum = 0.0;
        for (const auto& s : ds.samples)
            sum += sequence_perplexity(endpoint, s.input + " " + s.output);
        return sum / static_cast<double>(ds.samples.size());
    };
    return {mean_ppl(s0), mean_ppl(s1)};
}

}  // namespace propinfer
