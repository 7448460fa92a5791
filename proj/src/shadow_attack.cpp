#include "propinfer/shadow_attack.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <unordered_map>
#include <unordered_set>

#include "propinfer/errors.hpp"
#include "propinfer/parallel.hpp"
#include "propinfer/rng.hpp"

namespace propinfer {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr std::uint64_t kFactoryStream = 0xFACu;
constexpr std::uint64_t kGenStream = 0x6E6u;
constexpr std::uint64_t kTargetStream = 0x7A6u;

}  // namespace

ModelEndpoint SyntheticFactory::build(const LabeledDataset&, double ratio, Mode mode,
                                      std::uint64_t seed) {
    return synthetic_endpoint(build_generator(ratio, mode, vocab_, sample_len_, seed));
}

ModelEndpoint ExternalFactory::build(const LabeledDataset& shadow_dataset, double, Mode mode,
                                     std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(work_dir_);
    char name[64];
    std::snprintf(name, sizeof name, "shadow_%016llx.jsonl",
                  static_cast<unsigned long long>(seed));
    fs::path dataset_path = fs::path(work_dir_) / name;
    save_jsonl(shadow_dataset, dataset_path.string());

    std::string cmd = command_ + " --dataset " + dataset_path.string() + " --mode " +
                      to_string(mode) + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw ShadowBuildFailed("cannot invoke: " + command_);
    std::string output;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) output += buf;
    int status = pclose(pipe);
    if (status != 0)
        throw ShadowBuildFailed("fine-tune command exited with status " + std::to_string(status));
    auto end = output.find_first_of(" \t\r\n");
    std::string url = output.substr(0, end);
    if (url.empty()) throw ShadowBuildFailed("fine-tune command printed no endpoint URL");

    ModelEndpoint ep;
    ep.model = std::make_shared<RemoteModel>(url, model_name_);
    return ep;
}

ShadowPlanResult build_shadow_plan(const LabeledDataset& aux, const std::string& property,
                                   const std::vector<double>& ratios, int repeats,
                                   std::size_t size, std::uint64_t seed) {
    if (ratios.empty()) throw Error("shadow plan needs at least one ratio");
    if (repeats < 1) throw Error("shadow plan needs repeats >= 1");
    for (std::size_t i = 0; i + 1 < ratios.size(); ++i)
        if (!(ratios[i] < ratios[i + 1])) throw Error("shadow ratios must be strictly increasing");

    ShadowPlanResult result;
    result.plan = ShadowPlan{ratios, repeats, size, seed};
    result.datasets.reserve(result.plan.model_count());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        for (int j = 0; j < repeats; ++j) {
            std::uint64_t cell_seed = mix_seed(seed, i, static_cast<std::uint64_t>(j));
            try {
                result.datasets.push_back(
                    subsample_to_ratio(aux, property, ratios[i], size, cell_seed));
            } catch (const InfeasibleRatio& e) {
                throw InfeasibleRatio(e.required_one, e.available_one, e.required_zero,
                                      e.available_zero,
                                      "ratio " + std::to_string(ratios[i]) + ": ");
            }
        }
    }
    return result;
}

namespace {

// Streaming containment counters for one (model, prompt) cell; keeps the word
// statistics without retaining the generated texts.
struct CellCounts {
    std::unordered_map<std::string, std::size_t> contains;
    std::size_t n_texts = 0;
};

void accumulate(CellCounts& cell, const std::vector<std::string>& texts) {
    std::unordered_set<std::string> in_text;
    for (const auto& text : texts) {
        in_text.clear();
        for (auto& tok : tokenize(text)) in_text.insert(std::move(tok));
        for (const auto& tok : in_text) ++cell.contains[tok];
    }
    cell.n_texts += texts.size();
}

Eigen::VectorXd averaged_frequencies(const std::vector<CellCounts>& cells,
                                     const Vocabulary& vocab) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    for (const auto& cell : cells) {
        for (std::size_t w = 0; w < vocab.size(); ++w) {
            auto it = cell.contains.find(vocab.words[w]);
            if (it != cell.contains.end())
                acc[static_cast<Eigen::Index>(w)] +=
                    static_cast<double>(it->second) / static_cast<double>(cell.n_texts);
        }
    }
    return acc / static_cast<double>(cells.size());
}

struct ShadowCoords {
    int ratio_index;
    int repeat_index;
    double ratio;
};

std::vector<ShadowCoords> plan_coords(const ShadowPlan& plan) {
    std::vector<ShadowCoords> coords;
    coords.reserve(plan.model_count());
    for (std::size_t i = 0; i < plan.ratios.size(); ++i)
        for (int j = 0; j < plan.repeats; ++j)
            coords.push_back({static_cast<int>(i), j, plan.ratios[i]});
    return coords;
}

}  // namespace

AttackReport run_wordfreq_shadow_attack(const ShadowPlanResult& plan, ModelFactory& factory,
                                        Mode mode, const ModelEndpoint& target_endpoint,
                                        const PromptSet& prompt_set, std::size_t n_gen,
                                        std::size_t d_keywords, const GbtParams& gbt_params,
                                        const std::string& property, std::uint64_t seed) {
    if (n_gen < 1) throw Error("n_gen must be >= 1");
    prompt_set.validate();
    auto prompts = prompt_set.full_prompts();
    auto coords = plan_coords(plan.plan);
    std::size_t k = coords.size();

    AttackReport report;
    report.attack_kind = "shadow-wordfreq";
    report.property = property;
    report.plan = PlanSummary{plan.plan.ratios, plan.plan.repeats, plan.plan.dataset_size};
    report.seeds["root"] = seed;
    report.seeds["plan"] = plan.plan.seed;

    auto t0 = Clock::now();
    // shadow acquisition + generation; independent jobs keyed by (i, j)
    std::vector<std::vector<CellCounts>> shadow_cells(k,
                                                      std::vector<CellCounts>(prompts.size()));
    try {
        parallel_for(k, [&](std::size_t s) {
            const auto& c = coords[s];
            auto endpoint = factory.build(
                plan.datasets.at(s), c.ratio, mode,
                mix_seed(seed, kFactoryStream, c.ratio_index, c.repeat_index));
            for (std::size_t p = 0; p < prompts.size(); ++p) {
                auto set = generate_batch(
                    endpoint, prompts[p], n_gen,
                    mix_seed(mix_seed(seed, kGenStream, p), c.ratio_index, c.repeat_index));
                accumulate(shadow_cells[s][p], set.texts);
            }
        });
    } catch (const Error& e) {
        throw Error(std::string("shadow-generation stage: ") + e.what());
    }
    report.timings_ms["shadow_generation"] = ms_since(t0);

    // vocabulary from shadow generations only; the target never leaks into it
    t0 = Clock::now();
    Vocabulary vocab;
    {
        std::unordered_set<std::string> seen;
        for (const auto& cells : shadow_cells)
            for (const auto& cell : cells)
                for (const auto& [word, _] : cell.contains) seen.insert(word);
        vocab.words.assign(seen.begin(), seen.end());
        std::sort(vocab.words.begin(), vocab.words.end());
    }

    FrequencyMatrix matrix;
    matrix.vocab = vocab;
    matrix.values.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(vocab.size()));
    Eigen::VectorXd ground(static_cast<Eigen::Index>(k));
    for (std::size_t s = 0; s < k; ++s) {
        char id[32];
        std::snprintf(id, sizeof id, "shadow_%d_%d", coords[s].ratio_index,
                      coords[s].repeat_index);
        matrix.model_ids.emplace_back(id);
        matrix.values.row(static_cast<Eigen::Index>(s)) =
            averaged_frequencies(shadow_cells[s], vocab).transpose();
        ground[static_cast<Eigen::Index>(s)] = coords[s].ratio;
    }
    report.timings_ms["feature_extraction"] = ms_since(t0);

    t0 = Clock::now();
    KeywordSelection selection;
    Eigen::MatrixXd X;
    MetaRegressor model;
    try {
        selection = select_keywords(matrix, ground, d_keywords);
        X = restrict_to_keywords(matrix, selection);
        model = MetaRegressor::fit(X, ground, gbt_params);
    } catch (const Error& e) {
        throw Error(std::string("meta-training stage: ") + e.what());
    }
    report.keywords = selection.keywords;
    report.timings_ms["meta_training"] = ms_since(t0);

    // target features: same prompts, same n_gen, shadow vocabulary
    t0 = Clock::now();
    std::vector<CellCounts> target_cells(prompts.size());
    try {
        for (std::size_t p = 0; p < prompts.size(); ++p) {
            auto set = generate_batch(target_endpoint, prompts[p], n_gen,
                                      mix_seed(seed, kTargetStream, p));
            accumulate(target_cells[p], set.texts);
        }
    } catch (const Error& e) {
        throw Error(std::string("target-generation stage: ") + e.what());
    }
    Eigen::VectorXd target_features =
        restrict_to_keywords(averaged_frequencies(target_cells, vocab), vocab, selection);
    report.timings_ms["target_feature"] = ms_since(t0);

    report.prediction = model.predict(target_features);
    report.details = {{"n_gen", n_gen},
                      {"d_keywords", d_keywords},
                      {"vocab_size", vocab.size()},
                      {"n_prompts", prompts.size()},
                      {"gbt", {{"n_rounds", gbt_params.n_rounds},
                               {"learning_rate", gbt_params.learning_rate},
                               {"max_depth", gbt_params.max_depth},
                               {"min_leaf", gbt_params.min_leaf}}}};
    return report;
}

AttackReport run_perplexity_shadow_attack(const ShadowPlanResult& plan, ModelFactory& factory,
                                          Mode mode, const ModelEndpoint& target_endpoint,
                                          const LabeledDataset& s0, const LabeledDataset& s1,
                                          const GbtParams& gbt_params, const std::string& property,
                                          std::uint64_t seed) {
    auto coords = plan_coords(plan.plan);
    std::size_t k = coords.size();

    AttackReport report;
    report.attack_kind = "shadow-perplexity";
    report.property = property;
    report.plan = PlanSummary{plan.plan.ratios, plan.plan.repeats, plan.plan.dataset_size};
    report.seeds["root"] = seed;
    report.seeds["plan"] = plan.plan.seed;

    auto t0 = Clock::now();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(k), 2);
    Eigen::VectorXd ground(static_cast<Eigen::Index>(k));
    try {
        parallel_for(k, [&](std::size_t s) {
            const auto& c = coords[s];
            auto endpoint = factory.build(
                plan.datasets.at(s), c.ratio, mode,
                mix_seed(seed, kFactoryStream, c.ratio_index, c.repeat_index));
            X.row(static_cast<Eigen::Index>(s)) =
                perplexity_features(endpoint, property, s0, s1).transpose();
            ground[static_cast<Eigen::Index>(s)] = c.ratio;
        });
    } catch (const Error& e) {
        throw Error(std::string("shadow-scoring stage: ") + e.what());
    }
    report.timings_ms["shadow_scoring"] = ms_since(t0);

    bool zero_signal = true;
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        if (std::abs(X(r, 0) - X(r, 1)) > 1e-12) zero_signal = false;
    if (zero_signal) report.flags.push_back("ZeroSignal");

    t0 = Clock::now();
    MetaRegressor model = MetaRegressor::fit(X, ground, gbt_params);
    report.timings_ms["meta_training"] = ms_since(t0);

    t0 = Clock::now();
    Eigen::Vector2d target_features = perplexity_features(target_endpoint, property, s0, s1);
    report.timings_ms["target_feature"] = ms_since(t0);

    report.prediction = model.predict(target_features);
    report.details = {{"s0_size", s0.samples.size()},
                      {"s1_size", s1.samples.size()},
                      {"target_features", {target_features[0], target_features[1]}}};
    return report;
}

}  // namespace propinfer
