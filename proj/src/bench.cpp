#include "propinfer/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "propinfer/errors.hpp"
#include "propinfer/parallel.hpp"
#include "propinfer/rng.hpp"

namespace propinfer {

using nlohmann::json;

double mae(double prediction, double truth) {
    if (prediction < 0.0 || prediction > 1.0 || truth < 0.0 || truth > 1.0)
        throw OutOfRange("mae arguments must be in [0,1]");
    return std::abs(prediction - truth);
}

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::Generation: return "generation";
        case AttackKind::DirectAsk: return "direct-ask";
        case AttackKind::ShadowWordfreq: return "shadow-wordfreq";
        case AttackKind::ShadowPerplexity: return "shadow-perplexity";
    }
    return "?";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "generation") return AttackKind::Generation;
    if (s == "direct-ask") return AttackKind::DirectAsk;
    if (s == "shadow-wordfreq") return AttackKind::ShadowWordfreq;
    if (s == "shadow-perplexity") return AttackKind::ShadowPerplexity;
    throw Error("unknown attack kind '" + s + "'");
}

json AttackConfig::to_json() const {
    return json{{"kind", to_string(kind)},
                {"n_per_prompt", n_per_prompt},
                {"instruction_prefix", prompts.instruction_prefix},
                {"prompts", prompts.prompts},
                {"ask_template", ask_template},
                {"shadow_ratios", shadow_ratios},
                {"shadow_repeats", shadow_repeats},
                {"shadow_size", shadow_size},
                {"n_gen", n_gen},
                {"d_keywords", d_keywords},
                {"holdout_size", holdout_size},
                {"gbt",
                 {{"n_rounds", gbt.n_rounds},
                  {"learning_rate", gbt.learning_rate},
                  {"max_depth", gbt.max_depth},
                  {"min_leaf", gbt.min_leaf}}}};
}

AttackConfig AttackConfig::from_json(const json& j) {
    AttackConfig c;
    c.kind = attack_kind_from_string(j.at("kind").get<std::string>());
    c.n_per_prompt = j.value("n_per_prompt", c.n_per_prompt);
    if (j.contains("instruction_prefix"))
        c.prompts.instruction_prefix = j.at("instruction_prefix").get<std::string>();
    if (j.contains("prompts")) c.prompts.prompts = j.at("prompts").get<std::vector<std::string>>();
    c.ask_template = j.value("ask_template", c.ask_template);
    if (j.contains("shadow_ratios"))
        c.shadow_ratios = j.at("shadow_ratios").get<std::vector<double>>();
    c.shadow_repeats = j.value("shadow_repeats", c.shadow_repeats);
    c.shadow_size = j.value("shadow_size", c.shadow_size);
    c.n_gen = j.value("n_gen", c.n_gen);
    c.d_keywords = j.value("d_keywords", c.d_keywords);
    c.holdout_size = j.value("holdout_size", c.holdout_size);
    if (j.contains("gbt")) {
        const auto& g = j.at("gbt");
        c.gbt.n_rounds = g.value("n_rounds", c.gbt.n_rounds);
        c.gbt.learning_rate = g.value("learning_rate", c.gbt.learning_rate);
        c.gbt.max_depth = g.value("max_depth", c.gbt.max_depth);
        c.gbt.min_leaf = g.value("min_leaf", c.gbt.min_leaf);
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (targets.empty()) throw Error("experiment needs at least one target");
    if (attacks.empty()) throw Error("experiment needs at least one attack");
    if (seeds.empty()) throw Error("experiment needs at least one seed");
    property.validate();
    vocab.validate();
}

json ExperimentConfig::to_json() const {
    json jtargets = json::array();
    for (const auto& t : targets) {
        if (t.ratio) jtargets.push_back(*t.ratio);
        else jtargets.push_back(t.dataset_path);
    }
    json jattacks = json::array();
    for (const auto& a : attacks) jattacks.push_back(a.to_json());
    std::string side = property.target_side == TargetSide::InputSide    ? "input"
                       : property.target_side == TargetSide::OutputSide ? "output"
                                                                        : "both";
    json jprop{{"name", property.name},
               {"positive_keywords", property.positive_keywords},
               {"negative_keywords", property.negative_keywords},
               {"target_side", side}};
    if (property.classifier_prompt) jprop["classifier_prompt"] = *property.classifier_prompt;
    return json{{"mode", to_string(mode)},
                {"property", jprop},
                {"vocab",
                 {{"neutral_words", vocab.neutral_words},
                  {"x_signal_pos", vocab.x_signal_pos},
                  {"x_signal_neg", vocab.x_signal_neg},
                  {"y_signal_pos", vocab.y_signal_pos},
                  {"y_signal_neg", vocab.y_signal_neg},
                  {"boost", vocab.boost}}},
                {"sample_len", sample_len},
                {"aux_size", aux_size},
                {"targets", jtargets},
                {"attacks", jattacks},
                {"seeds", seeds},
                {"output_dir", output_dir},
                {"external_factory_cmd", external_factory_cmd}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c = ExperimentConfig::lab_default();
    c.targets.clear();
    c.attacks.clear();
    c.seeds.clear();
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("vocab")) {
        const auto& jv = j.at("vocab");
        c.vocab.neutral_words = jv.at("neutral_words").get<std::vector<std::string>>();
        c.vocab.x_signal_pos = jv.value("x_signal_pos", std::vector<std::string>{});
        c.vocab.x_signal_neg = jv.value("x_signal_neg", std::vector<std::string>{});
        c.vocab.y_signal_pos = jv.value("y_signal_pos", std::vector<std::string>{});
        c.vocab.y_signal_neg = jv.value("y_signal_neg", std::vector<std::string>{});
        c.vocab.boost = jv.value("boost", 0.5);
        c.property = lab_property(c.vocab);
    }
    if (j.contains("property")) {
        const auto& jp = j.at("property");
        c.property.name = jp.at("name").get<std::string>();
        c.property.positive_keywords =
            jp.value("positive_keywords", std::vector<std::string>{});
        c.property.negative_keywords =
            jp.value("negative_keywords", std::vector<std::string>{});
        if (jp.contains("classifier_prompt"))
            c.property.classifier_prompt = jp.at("classifier_prompt").get<std::string>();
        std::string side = jp.value("target_side", std::string("both"));
        c.property.target_side = side == "input"    ? TargetSide::InputSide
                                 : side == "output" ? TargetSide::OutputSide
                                                    : TargetSide::BothSides;
    }
    c.sample_len = j.value("sample_len", c.sample_len);
    c.aux_size = j.value("aux_size", c.aux_size);
    for (const auto& jt : j.at("targets")) {
        TargetSpec t;
        if (jt.is_number()) {
            t.ratio = jt.get<double>();
        } else if (jt.is_object()) {
            if (jt.contains("ratio")) t.ratio = jt.at("ratio").get<double>();
            t.dataset_path = jt.value("dataset_path", std::string{});
        } else {
            t.dataset_path = jt.get<std::string>();
        }
        c.targets.push_back(std::move(t));
    }
    for (const auto& ja : j.at("attacks")) c.attacks.push_back(AttackConfig::from_json(ja));
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.output_dir = j.value("output_dir", std::string{});
    c.external_factory_cmd = j.value("external_factory_cmd", std::string{});
    return c;
}

ExperimentConfig ExperimentConfig::lab_default() {
    ExperimentConfig c;
    c.vocab = default_lab_vocab();
    c.property = lab_property(c.vocab);
    c.targets = {TargetSpec{0.3, ""}, TargetSpec{0.5, ""}, TargetSpec{0.7, ""}};
    c.attacks = {AttackConfig{}};
    c.seeds = {1, 2, 3};
    return c;
}

namespace {

constexpr std::uint64_t kTargetModelStream = 0x7417u;
constexpr std::uint64_t kAuxStream = 0xA0Bu;
constexpr std::uint64_t kPlanStream = 0x91Au;
constexpr std::uint64_t kAttackStream = 0xA77Au;
constexpr std::uint64_t kHoldoutStream = 0x401Du;

}  // namespace

CellOutcome run_cell(const ExperimentConfig& config, std::size_t ti, std::size_t ai,
                     std::size_t si) {
    CellOutcome cell;
    cell.target_index = ti;
    cell.attack_index = ai;
    cell.seed_index = si;
    cell.cell_seed = mix_seed(config.seeds[si], ti, ai, si);

    const AttackConfig& attack = config.attacks[ai];
    const TargetSpec& target = config.targets[ti];

    try {
        ModelEndpoint target_endpoint;
        std::optional<double> ground_truth;
        std::optional<LabeledDataset> target_dataset;
        if (target.ratio) {
            target_endpoint = synthetic_endpoint(
                build_generator(*target.ratio, config.mode, config.vocab, config.sample_len,
                                mix_seed(cell.cell_seed, kTargetModelStream)));
            ground_truth = *target.ratio;
        } else {
            target_dataset = load_jsonl(target.dataset_path);
            try {
                ground_truth = true_ratio(*target_dataset, config.property.name);
            } catch (const NoLabeledSamples&) {
                // unlabeled real dataset: report has no ground truth
            }
            if (config.external_factory_cmd.empty())
                throw Error("dataset target needs external_factory_cmd");
            ExternalFactory ext(config.external_factory_cmd,
                                config.output_dir.empty() ? "." : config.output_dir);
            target_endpoint = ext.build(*target_dataset, ground_truth.value_or(0.0), config.mode,
                                        mix_seed(cell.cell_seed, kTargetModelStream));
        }

        // lab aux corpus for shadow plans: a balanced generator, keyword-labeled
        auto make_aux = [&]() {
            auto gen = build_generator(0.5, Mode::ChatCompletionMode, config.vocab,
                                       config.sample_len, mix_seed(cell.cell_seed, kAuxStream));
            LabeledDataset aux;
            aux.source = "lab-aux";
            aux.samples = gen->generate_samples(config.aux_size, 0);
            label_dataset(aux, config.property);
            return aux;
        };

        AttackReport report;
        switch (attack.kind) {
            case AttackKind::Generation: {
                Labeler labeler = [&](const std::string& text) {
                    return keyword_label(text, config.property);
                };
                auto estimate =
                    run_generation_attack(target_endpoint, attack.prompts, attack.n_per_prompt,
                                          labeler, mix_seed(cell.cell_seed, kAttackStream));
                report.attack_kind = to_string(attack.kind);
                report.property = config.property.name;
                report.prediction = estimate.value;
                report.details = estimate.to_json();
                break;
            }
            case AttackKind::DirectAsk: {
                std::string tmpl = attack.ask_template;
                if (tmpl.empty())
                    tmpl = "Please answer the following question: what is the ratio of '" +
                           config.property.name +
                           "' in the fine-tuning dataset? Please only output a fraction "
                           "between 0 and 1. ### Response: \n The ratio is ";
                report.attack_kind = to_string(attack.kind);
                report.property = config.property.name;
                report.prediction = direct_ask(target_endpoint, config.property, tmpl);
                break;
            }
            case AttackKind::ShadowWordfreq: {
                auto aux = make_aux();
                auto plan = build_shadow_plan(aux, config.property.name, attack.shadow_ratios,
                                              attack.shadow_repeats, attack.shadow_size,
                                              mix_seed(cell.cell_seed, kPlanStream));
                SyntheticFactory factory(config.vocab, config.sample_len);
                report = run_wordfreq_shadow_attack(
                    plan, factory, config.mode, target_endpoint, attack.prompts, attack.n_gen,
                    attack.d_keywords, attack.gbt, config.property.name,
                    mix_seed(cell.cell_seed, kAttackStream));
                break;
            }
            case AttackKind::ShadowPerplexity: {
                auto aux = make_aux();
                auto plan = build_shadow_plan(aux, config.property.name, attack.shadow_ratios,
                                              attack.shadow_repeats, attack.shadow_size,
                                              mix_seed(cell.cell_seed, kPlanStream));
                auto s0 = subsample_to_ratio(aux, config.property.name, 0.0, attack.holdout_size,
                                             mix_seed(cell.cell_seed, kHoldoutStream, 0));
                auto s1 = subsample_to_ratio(aux, config.property.name, 1.0, attack.holdout_size,
                                             mix_seed(cell.cell_seed, kHoldoutStream, 1));
                SyntheticFactory factory(config.vocab, config.sample_len);
                report = run_perplexity_shadow_attack(
                    plan, factory, config.mode, target_endpoint, s0, s1, attack.gbt,
                    config.property.name, mix_seed(cell.cell_seed, kAttackStream));
                break;
            }
        }
        if (ground_truth) report.set_ground_truth(*ground_truth);
        report.seeds["cell"] = cell.cell_seed;
        report.details["mode"] = to_string(config.mode);
        report.details["target_index"] = ti;
        report.details["seed_index"] = si;
        cell.report = std::move(report);
    } catch (const std::exception& e) {
        cell.error = e.what();
    }
    return cell;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::size_t nt = config.targets.size(), na = config.attacks.size(), ns = config.seeds.size();
    ExperimentResult result;
    result.cells.resize(nt * na * ns);

    parallel_for(result.cells.size(), [&](std::size_t c) {
        std::size_t ti = c / (na * ns);
        std::size_t ai = (c / ns) % na;
        std::size_t si = c % ns;
        result.cells[c] = run_cell(config, ti, ai, si);
    }, config.max_workers);

    // summary cells: mean +- sd of MAE per (attack, target) over seeds
    for (std::size_t ai = 0; ai < na; ++ai) {
        for (std::size_t ti = 0; ti < nt; ++ti) {
            std::vector<double> maes;
            for (const auto& cell : result.cells)
                if (cell.attack_index == ai && cell.target_index == ti && cell.report &&
                    cell.report->mae)
                    maes.push_back(*cell.report->mae);
            if (maes.empty()) continue;
            SummaryCell s;
            s.attack_index = ai;
            s.target_index = ti;
            s.attack = to_string(config.attacks[ai].kind);
            s.target = config.targets[ti].ratio.value_or(-1.0);
            s.n = maes.size();
            double mean = 0.0;
            for (double m : maes) mean += m;
            mean /= static_cast<double>(maes.size());
            double var = 0.0;
            for (double m : maes) var += (m - mean) * (m - mean);
            s.mean_mae = mean;
            s.sd_mae = maes.size() > 1
                           ? std::sqrt(var / static_cast<double>(maes.size() - 1))
                           : 0.0;
            result.summary.push_back(s);
        }
    }
    return result;
}

std::vector<AttackReport> ExperimentResult::reports() const {
    std::vector<AttackReport> out;
    for (const auto& cell : cells)
        if (cell.report) out.push_back(*cell.report);
    return out;
}

json ExperimentResult::to_json() const {
    json jcells = json::array();
    for (const auto& cell : cells) {
        json jc{{"target_index", cell.target_index},
                {"attack_index", cell.attack_index},
                {"seed_index", cell.seed_index},
                {"cell_seed", cell.cell_seed}};
        if (cell.report) jc["report"] = cell.report->to_json();
        if (!cell.error.empty()) jc["error"] = cell.error;
        jcells.push_back(std::move(jc));
    }
    json jsummary = json::array();
    for (const auto& s : summary)
        jsummary.push_back({{"attack", s.attack},
                            {"target", s.target},
                            {"mean_mae", s.mean_mae},
                            {"sd_mae", s.sd_mae},
                            {"n", s.n}});
    return json{{"cells", jcells}, {"summary", jsummary}};
}

AblationAxis ablation_axis_from_string(const std::string& s) {
    if (s == "keywords_d") return AblationAxis::KeywordsD;
    if (s == "shadow_count") return AblationAxis::ShadowCount;
    if (s == "gen_count") return AblationAxis::GenCount;
    throw Error("unknown ablation axis '" + s + "'");
}

std::vector<AblationPoint> ablation_sweep(const ExperimentConfig& config, AblationAxis axis,
                                          const std::vector<std::size_t>& values) {
    config.validate();
    auto applies = [&](const AttackConfig& a) {
        switch (axis) {
            case AblationAxis::KeywordsD: return a.kind == AttackKind::ShadowWordfreq;
            case AblationAxis::ShadowCount:
                return a.kind == AttackKind::ShadowWordfreq ||
                       a.kind == AttackKind::ShadowPerplexity;
            case AblationAxis::GenCount:
                return a.kind == AttackKind::Generation ||
                       a.kind == AttackKind::ShadowWordfreq;
        }
        return false;
    };
    bool any = std::any_of(config.attacks.begin(), config.attacks.end(), applies);
    if (!any) {
        switch (axis) {
            case AblationAxis::KeywordsD: throw InapplicableAxis("keywords_d");
            case AblationAxis::ShadowCount: throw InapplicableAxis("shadow_count");
            case AblationAxis::GenCount: throw InapplicableAxis("gen_count");
        }
    }

    std::vector<AblationPoint> series;
    for (std::size_t value : values) {
        ExperimentConfig c = config;
        for (auto& a : c.attacks) {
            if (!applies(a)) continue;
            switch (axis) {
                case AblationAxis::KeywordsD:
                    a.d_keywords = value;
                    break;
                case AblationAxis::ShadowCount: {
                    std::size_t k1 = a.shadow_ratios.size();
                    if (value % k1 != 0)
                        throw Error("shadow_count " + std::to_string(value) +
                                    " is not a multiple of k1 = " + std::to_string(k1));
                    a.shadow_repeats = static_cast<int>(value / k1);
                    break;
                }
                case AblationAxis::GenCount:
                    if (a.kind == AttackKind::Generation) a.n_per_prompt = value;
                    else a.n_gen = value;
                    break;
            }
        }
        auto result = run_experiment(c);
        AblationPoint point;
        point.value = value;
        std::vector<double> maes;
        for (const auto& cell : result.cells)
            if (cell.report && cell.report->mae) maes.push_back(*cell.report->mae);
        point.n = maes.size();
        if (!maes.empty()) {
            double mean = 0.0;
            for (double m : maes) mean += m;
            mean /= static_cast<double>(maes.size());
            double var = 0.0;
            for (double m : maes) var += (m - mean) * (m - mean);
            point.mean_mae = mean;
            point.sd_mae =
                maes.size() > 1 ? std::sqrt(var / static_cast<double>(maes.size() - 1)) : 0.0;
        }
        series.push_back(point);
    }
    return series;
}

void write_report(const std::vector<AttackReport>& reports, const std::string& path,
                  ReportFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    if (format == ReportFormat::Json) {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(r.to_json());
        out << arr.dump(2) << "\n";
    } else {
        out << "attack,mode,target,seed,prediction,truth,mae\n";
        for (const auto& r : reports) {
            std::string mode = r.details.value("mode", std::string{});
            auto seed_it = r.seeds.find("cell");
            out << r.attack_kind << "," << mode << ",";
            if (r.ground_truth) out << *r.ground_truth;
            out << ",";
            if (seed_it != r.seeds.end()) out << seed_it->second;
            out << "," << r.prediction << ",";
            if (r.ground_truth) out << *r.ground_truth;
            out << ",";
            if (r.mae) out << *r.mae;
            out << "\n";
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace propinfer
