#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "propinfer/gen_attack.hpp"
#include "propinfer/report.hpp"
#include "propinfer/shadow_attack.hpp"
#include "propinfer/synth_lab.hpp"

namespace propinfer {

/// |prediction - truth|; both arguments must lie in [0,1].
double mae(double prediction, double truth);

enum class AttackKind { Generation, DirectAsk, ShadowWordfreq, ShadowPerplexity };

std::string to_string(AttackKind k);
AttackKind attack_kind_from_string(const std::string& s);

struct AttackConfig {
    AttackKind kind = AttackKind::Generation;
    // generation
    std::size_t n_per_prompt = 2000;
    PromptSet prompts = default_prompt_set();
    // direct-ask
    std::string ask_template;
    // shadow attacks
    std::vector<double> shadow_ratios = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    int shadow_repeats = 5;
    std::size_t shadow_size = 200;
    std::size_t n_gen = 2000;
    std::size_t d_keywords = 10;
    std::size_t holdout_size = 50;
    GbtParams gbt;

    nlohmann::json to_json() const;
    static AttackConfig from_json(const nlohmann::json& j);
};

/// A target is either a lab ratio (synthetic target model) or a dataset path
/// handed to the external fine-tune hook.
struct TargetSpec {
    std::optional<double> ratio;
    std::string dataset_path;
};

struct ExperimentConfig {
    Mode mode = Mode::ChatCompletionMode;
    PropertySpec property;
    VocabSpec vocab;
    std::size_t sample_len = 30;
    std::size_t aux_size = 4000;  // lab auxiliary dataset size for shadow plans
    std::vector<TargetSpec> targets;
    std::vector<AttackConfig> attacks;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;
    std::string external_factory_cmd;  // empty = lab-only
    std::size_t max_workers = 0;       // 0 = hardware concurrency

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);

    /// Default lab experiment: CC mode, default vocab and property.
    static ExperimentConfig lab_default();
};

struct CellOutcome {
    std::size_t target_index = 0;
    std::size_t attack_index = 0;
    std::size_t seed_index = 0;
    std::uint64_t cell_seed = 0;
    std::optional<AttackReport> report;
    std::string error;  // nonempty when the cell failed
};

struct SummaryCell {
    std::size_t attack_index = 0;
    std::size_t target_index = 0;
    std::string attack;
    double target = 0.0;
    double mean_mae = 0.0;
    double sd_mae = 0.0;
    std::size_t n = 0;
};

struct ExperimentResult {
    std::vector<CellOutcome> cells;
    std::vector<SummaryCell> summary;
    std::vector<AttackReport> reports() const;
    nlohmann::json to_json() const;
};

/// Execute the full targets x attacks x seeds grid. Cells are independent
/// jobs with derived seeds; failures are recorded per cell and never abort
/// the grid.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Run one grid cell in isolation (reproduces exactly what the grid ran).
CellOutcome run_cell(const ExperimentConfig& config, std::size_t target_index,
                     std::size_t attack_index, std::size_t seed_index);

enum class AblationAxis { KeywordsD, ShadowCount, GenCount };

AblationAxis ablation_axis_from_string(const std::string& s);

struct AblationPoint {
    std::size_t value = 0;
    double mean_mae = 0.0;
    double sd_mae = 0.0;
    std::size_t n = 0;
};

/// One full grid run per axis value, everything else fixed, shared seeds.
std::vector<AblationPoint> ablation_sweep(const ExperimentConfig& config, AblationAxis axis,
                                          const std::vector<std::size_t>& values);

enum class ReportFormat { Json, Csv };

/// CSV columns: attack, mode, target, seed, prediction, truth, mae.
/// JSON: full nested reports with canonical (sorted) key order.
void write_report(const std::vector<AttackReport>& reports, const std::string& path,
                  ReportFormat format);

}  // namespace propinfer
