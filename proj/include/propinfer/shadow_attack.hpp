#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "propinfer/corpus.hpp"
#include "propinfer/features.hpp"
#include "propinfer/gbt.hpp"
#include "propinfer/gen_attack.hpp"
#include "propinfer/report.hpp"
#include "propinfer/synth_lab.hpp"

namespace propinfer {

struct ShadowPlan {
    std::vector<double> ratios;  // k1 values, strictly increasing
    int repeats = 1;             // k2
    std::size_t dataset_size = 0;
    std::uint64_t seed = 0;

    std::size_t model_count() const { return ratios.size() * static_cast<std::size_t>(repeats); }
};

struct ShadowPlanResult {
    ShadowPlan plan;
    /// k1*k2 datasets, indexed i*repeats + j. Each achieves its ratio exactly.
    std::vector<LabeledDataset> datasets;
};

struct ShadowRecord {
    std::string model_ref;
    double ground_ratio = 0.0;
    Eigen::VectorXd features;
    int ratio_index = 0;
    int repeat_index = 0;
};

/// Seam for shadow-model acquisition. The fine-tune itself lives outside the
/// artifact; a factory maps a shadow dataset (or just its ratio) to an endpoint.
class ModelFactory {
public:
    virtual ~ModelFactory() = default;
    virtual ModelEndpoint build(const LabeledDataset& shadow_dataset, double ratio, Mode mode,
                                std::uint64_t seed) = 0;
};

/// Desk-scale factory: ignores the dataset contents and builds a synth-lab
/// generator with the shadow ratio.
class SyntheticFactory : public ModelFactory {
public:
    SyntheticFactory(VocabSpec vocab, std::size_t sample_len)
        : vocab_(std::move(vocab)), sample_len_(sample_len) {}
    ModelEndpoint build(const LabeledDataset&, double ratio, Mode mode,
                        std::uint64_t seed) override;

private:
    VocabSpec vocab_;
    std::size_t sample_len_;
};

/// Shells out per shadow dataset: `<cmd> --dataset <path> --mode <qa|cc>`;
/// the command must print a base URL on stdout. Nonzero exit raises
/// ShadowBuildFailed.
class ExternalFactory : public ModelFactory {
public:
    ExternalFactory(std::string command, std::string work_dir, std::string model_name = "target")
        : command_(std::move(command)), work_dir_(std::move(work_dir)),
          model_name_(std::move(model_name)) {}
    ModelEndpoint build(const LabeledDataset& shadow_dataset, double ratio, Mode mode,
                        std::uint64_t seed) override;

private:
    std::string command_;
    std::string work_dir_;
    std::string model_name_;
};

/// Subsample k1*k2 shadow datasets from aux, one per (ratio, repeat) cell,
/// with per-cell derived seeds.
ShadowPlanResult build_shadow_plan(const LabeledDataset& aux, const std::string& property,
                                   const std::vector<double>& ratios, int repeats,
                                   std::size_t size, std::uint64_t seed);

/// Grey-box word-frequency attack: generate from every shadow model, build the
/// vocabulary (shadow generations only), select the top-d keywords by
/// F-statistic against the ground ratios, train the meta-regressor on the
/// restricted frequency matrix, and predict from the target's features.
AttackReport run_wordfreq_shadow_attack(const ShadowPlanResult& plan, ModelFactory& factory,
                                        Mode mode, const ModelEndpoint& target_endpoint,
                                        const PromptSet& prompt_set, std::size_t n_gen,
                                        std::size_t d_keywords, const GbtParams& gbt_params,
                                        const std::string& property, std::uint64_t seed);

/// Same pipeline with the 2-dimensional (mean perplexity on s0, on s1) feature.
AttackReport run_perplexity_shadow_attack(const ShadowPlanResult& plan, ModelFactory& factory,
                                          Mode mode, const ModelEndpoint& target_endpoint,
                                          const LabeledDataset& s0, const LabeledDataset& s1,
                                          const GbtParams& gbt_params, const std::string& property,
                                          std::uint64_t seed);

}  // namespace propinfer
