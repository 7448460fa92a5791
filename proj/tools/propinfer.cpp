// Command-line front end: dataset labeling and subsampling, lab endpoint
// construction, the individual attacks, and the full experiment harness.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "propinfer/bench.hpp"
#include "propinfer/errors.hpp"
#include "propinfer/gen_attack.hpp"
#include "propinfer/shadow_attack.hpp"
#include "propinfer/synth_lab.hpp"

using namespace propinfer;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

PropertySpec load_property(const std::string& path) {
    auto j = load_json(path);
    PropertySpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.positive_keywords = j.value("positive_keywords", std::vector<std::string>{});
    spec.negative_keywords = j.value("negative_keywords", std::vector<std::string>{});
    if (j.contains("classifier_prompt"))
        spec.classifier_prompt = j.at("classifier_prompt").get<std::string>();
    std::string side = j.value("target_side", std::string("both"));
    spec.target_side = side == "input"    ? TargetSide::InputSide
                       : side == "output" ? TargetSide::OutputSide
                                          : TargetSide::BothSides;
    spec.validate();
    return spec;
}

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string endpoint_url;
    double temperature = 1.0;
    std::string out;
    std::string format = "json";
};

/// Endpoint handle files: {"kind":"synthetic","generator":{...}} or
/// {"kind":"remote","url":"...","model":"..."}. --endpoint-url overrides.
ModelEndpoint resolve_endpoint(const GlobalOpts& g, const std::string& handle_path) {
    ModelEndpoint ep;
    if (!g.endpoint_url.empty()) {
        ep.model = std::make_shared<RemoteModel>(g.endpoint_url, "target");
    } else {
        if (handle_path.empty()) throw Error("no endpoint: pass --endpoint or --endpoint-url");
        auto j = load_json(handle_path);
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "synthetic") {
            ep.model = SyntheticModel::from_json(j.at("generator"));
        } else if (kind == "remote") {
            ep.model = std::make_shared<RemoteModel>(j.at("url").get<std::string>(),
                                                     j.value("model", std::string("target")));
        } else {
            throw Error("unknown endpoint kind '" + kind + "'");
        }
    }
    ep.decode.temperature = g.temperature;
    return ep;
}

ReportFormat parse_format(const std::string& f) {
    if (f == "json") return ReportFormat::Json;
    if (f == "csv") return ReportFormat::Csv;
    throw Error("unknown format '" + f + "' (expected json or csv)");
}

void emit_attack_report(const AttackReport& report, const GlobalOpts& g) {
    if (parse_format(g.format) == ReportFormat::Csv && !g.out.empty() && g.out != "-") {
        write_report({report}, g.out, ReportFormat::Csv);
    } else {
        write_text(g.out, report.to_json().dump(2) + "\n");
    }
}

ShadowPlanResult plan_from_options(const std::string& aux_path, const PropertySpec& prop,
                                   const std::vector<double>& ratios, int repeats,
                                   std::size_t size, std::uint64_t seed) {
    auto aux = load_jsonl(aux_path);
    label_dataset(aux, prop);
    return build_shadow_plan(aux, prop.name, ratios, repeats, size, seed);
}

std::unique_ptr<ModelFactory> make_factory(const std::string& factory_cmd,
                                           const std::string& work_dir,
                                           const std::string& lab_vocab_path,
                                           std::size_t sample_len) {
    if (!factory_cmd.empty())
        return std::make_unique<ExternalFactory>(factory_cmd,
                                                 work_dir.empty() ? "." : work_dir);
    VocabSpec vocab = default_lab_vocab();
    if (!lab_vocab_path.empty()) {
        auto j = load_json(lab_vocab_path);
        vocab.neutral_words = j.at("neutral_words").get<std::vector<std::string>>();
        vocab.x_signal_pos = j.value("x_signal_pos", std::vector<std::string>{});
        vocab.x_signal_neg = j.value("x_signal_neg", std::vector<std::string>{});
        vocab.y_signal_pos = j.value("y_signal_pos", std::vector<std::string>{});
        vocab.y_signal_neg = j.value("y_signal_neg", std::vector<std::string>{});
        vocab.boost = j.value("boost", 0.5);
    }
    return std::make_unique<SyntheticFactory>(vocab, sample_len);
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"property-ratio inference toolkit for fine-tuned text models"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "root RNG seed")->capture_default_str();
    app.add_option("--endpoint-url", g.endpoint_url, "remote completions base URL");
    app.add_option("--temperature", g.temperature, "sampling temperature")
        ->capture_default_str();
    app.add_option("--out", g.out, "output path ('-' = stdout)");
    app.add_option("--format", g.format, "report format: json or csv")->capture_default_str();

    // label
    std::string dataset_path, property_path;
    auto* label_cmd = app.add_subcommand("label", "attach keyword labels to a dataset");
    label_cmd->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    label_cmd->add_option("--property", property_path, "property spec JSON")->required();
    label_cmd->callback([&] {
        auto ds = load_jsonl(dataset_path);
        auto prop = load_property(property_path);
        label_dataset(ds, prop);
        if (g.out.empty() || g.out == "-") throw Error("label needs --out <path>");
        save_jsonl(ds, g.out);
        std::cout << "labeled " << ds.samples.size() << " samples; ratio("
                  << prop.name << ") = " << true_ratio(ds, prop.name) << "\n";
    });

    // subsample
    double sub_ratio = 0.5;
    std::size_t sub_size = 0;
    std::string sub_property = "signal";
    bool with_replacement = false;
    auto* sub_cmd = app.add_subcommand("subsample", "draw a subset with an exact label ratio");
    sub_cmd->add_option("--dataset", dataset_path, "labeled JSONL dataset")->required();
    sub_cmd->add_option("--property", sub_property, "property name")->required();
    sub_cmd->add_option("--ratio", sub_ratio, "target One-fraction")->required();
    sub_cmd->add_option("--size", sub_size, "subset size")->required();
    sub_cmd->add_flag("--with-replacement", with_replacement, "sample with replacement");
    sub_cmd->callback([&] {
        auto ds = load_jsonl(dataset_path);
        auto sub = subsample_to_ratio(ds, sub_property, sub_ratio, sub_size, g.seed,
                                      with_replacement);
        if (g.out.empty() || g.out == "-") throw Error("subsample needs --out <path>");
        save_jsonl(sub, g.out);
    });

    // lab build
    std::string gen_config;
    auto* lab_cmd = app.add_subcommand("lab", "synthetic lab utilities");
    auto* lab_build = lab_cmd->add_subcommand("build", "generator config -> endpoint handle");
    lab_build->add_option("--config", gen_config, "generator JSON config")->required();
    lab_build->callback([&] {
        auto gen = SyntheticModel::from_json(load_json(gen_config));
        json handle{{"kind", "synthetic"}, {"generator", gen->to_json()}};
        write_text(g.out, handle.dump(2) + "\n");
    });

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "run a single attack");
    std::string endpoint_path, aux_path, s0_path, s1_path, factory_cmd, lab_vocab_path;
    std::string mode_name = "cc", work_dir = ".";
    std::size_t n_per_prompt = 2000, n_gen = 2000, d_keywords = 10, shadow_size = 200;
    std::size_t sample_len = 30;
    int repeats = 5;
    std::vector<double> shadow_ratios{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

    auto* gen_attack_cmd =
        attack_cmd->add_subcommand("generate", "black-box generation attack");
    gen_attack_cmd->add_option("--endpoint", endpoint_path, "endpoint handle JSON");
    gen_attack_cmd->add_option("--property", property_path, "property spec JSON")->required();
    gen_attack_cmd->add_option("--n", n_per_prompt, "generations per prompt")
        ->capture_default_str();
    gen_attack_cmd->callback([&] {
        auto ep = resolve_endpoint(g, endpoint_path);
        auto prop = load_property(property_path);
        auto est = run_generation_attack(
            ep, default_prompt_set(), n_per_prompt,
            [&prop](const std::string& t) { return keyword_label(t, prop); }, g.seed);
        json j = est.to_json();
        j["property"] = prop.name;
        j["seed"] = g.seed;
        j["endpoint_id"] = ep.model->id();
        write_text(g.out, j.dump(2) + "\n");
    });

    auto add_shadow_options = [&](CLI::App* cmd) {
        cmd->add_option("--endpoint", endpoint_path, "target endpoint handle JSON");
        cmd->add_option("--aux", aux_path, "auxiliary JSONL dataset")->required();
        cmd->add_option("--property", property_path, "property spec JSON")->required();
        cmd->add_option("--ratios", shadow_ratios, "shadow ratios")->capture_default_str();
        cmd->add_option("--repeats", repeats, "shadow models per ratio")
            ->capture_default_str();
        cmd->add_option("--size", shadow_size, "shadow dataset size")->capture_default_str();
        cmd->add_option("--mode", mode_name, "fine-tuning mode: qa or cc")
            ->capture_default_str();
        cmd->add_option("--factory", factory_cmd, "external fine-tune command");
        cmd->add_option("--work-dir", work_dir, "shadow dataset directory (external factory)");
        cmd->add_option("--lab-vocab", lab_vocab_path, "lab vocab JSON (synthetic factory)");
        cmd->add_option("--sample-len", sample_len, "lab tokens per side")
            ->capture_default_str();
    };

    auto* wf_cmd =
        attack_cmd->add_subcommand("shadow-wordfreq", "grey-box word-frequency attack");
    add_shadow_options(wf_cmd);
    wf_cmd->add_option("--n-gen", n_gen, "generations per shadow prompt")
        ->capture_default_str();
    wf_cmd->add_option("--keywords", d_keywords, "selected keyword count")
        ->capture_default_str();
    wf_cmd->callback([&] {
        auto ep = resolve_endpoint(g, endpoint_path);
        auto prop = load_property(property_path);
        auto plan = plan_from_options(aux_path, prop, shadow_ratios, repeats, shadow_size,
                                      g.seed);
        auto factory = make_factory(factory_cmd, work_dir, lab_vocab_path, sample_len);
        auto report = run_wordfreq_shadow_attack(plan, *factory, mode_from_string(mode_name),
                                                 ep, default_prompt_set(), n_gen, d_keywords,
                                                 {}, prop.name, g.seed);
        emit_attack_report(report, g);
    });

    auto* ppl_cmd =
        attack_cmd->add_subcommand("shadow-perplexity", "grey-box perplexity attack");
    add_shadow_options(ppl_cmd);
    ppl_cmd->add_option("--s0", s0_path, "all-Zero holdout JSONL")->required();
    ppl_cmd->add_option("--s1", s1_path, "all-One holdout JSONL")->required();
    ppl_cmd->callback([&] {
        auto ep = resolve_endpoint(g, endpoint_path);
        auto prop = load_property(property_path);
        auto plan = plan_from_options(aux_path, prop, shadow_ratios, repeats, shadow_size,
                                      g.seed);
        auto factory = make_factory(factory_cmd, work_dir, lab_vocab_path, sample_len);
        auto report = run_perplexity_shadow_attack(plan, *factory,
                                                   mode_from_string(mode_name), ep,
                                                   load_jsonl(s0_path), load_jsonl(s1_path),
                                                   {}, prop.name, g.seed);
        emit_attack_report(report, g);
    });

    // ask
    std::string ask_template;
    auto* ask_cmd = app.add_subcommand("ask", "direct-ask baseline");
    ask_cmd->add_option("--endpoint", endpoint_path, "endpoint handle JSON");
    ask_cmd->add_option("--property", property_path, "property spec JSON")->required();
    ask_cmd->add_option("--template", ask_template, "question template");
    ask_cmd->callback([&] {
        auto ep = resolve_endpoint(g, endpoint_path);
        auto prop = load_property(property_path);
        if (ask_template.empty())
            ask_template = "What fraction of your fine-tuning data has property '" +
                           prop.name + "'? Answer with a number between 0 and 1.";
        double value = direct_ask(ep, prop, ask_template);
        json j{{"attack", "direct-ask"}, {"property", prop.name}, {"prediction", value}};
        write_text(g.out, j.dump(2) + "\n");
    });

    // experiment run
    std::string experiment_config;
    auto* exp_cmd = app.add_subcommand("experiment", "seeded experiment grids");
    auto* exp_run = exp_cmd->add_subcommand("run", "run a full experiment config");
    exp_run->add_option("--config", experiment_config, "experiment JSON config")->required();
    exp_run->callback([&] {
        auto config = ExperimentConfig::from_json(load_json(experiment_config));
        auto result = run_experiment(config);
        std::size_t failed = 0;
        for (const auto& cell : result.cells)
            if (!cell.error.empty()) ++failed;
        for (const auto& s : result.summary)
            std::cout << s.attack << " @ target " << s.target << ": MAE "
                      << percent(s.mean_mae) << " +- " << percent(s.sd_mae) << " (n=" << s.n
                      << ")\n";
        if (failed > 0) std::cout << failed << " cells failed\n";
        if (!g.out.empty() && g.out != "-")
            write_report(result.reports(), g.out, parse_format(g.format));
    });

    // ablate
    std::string axis_name;
    std::vector<std::size_t> axis_values;
    auto* ablate_cmd = app.add_subcommand("ablate", "sweep one attack parameter");
    ablate_cmd->add_option("--config", experiment_config, "experiment JSON config")
        ->required();
    ablate_cmd
        ->add_option("--axis", axis_name, "keywords_d, shadow_count or gen_count")
        ->required();
    ablate_cmd->add_option("--values", axis_values, "axis values")->required();
    ablate_cmd->callback([&] {
        auto config = ExperimentConfig::from_json(load_json(experiment_config));
        auto series =
            ablation_sweep(config, ablation_axis_from_string(axis_name), axis_values);
        json arr = json::array();
        for (const auto& p : series) {
            std::cout << axis_name << " = " << p.value << ": MAE " << percent(p.mean_mae)
                      << " +- " << percent(p.sd_mae) << " (n=" << p.n << ")\n";
            arr.push_back({{"value", p.value},
                           {"mean_mae", p.mean_mae},
                           {"sd_mae", p.sd_mae},
                           {"n", p.n}});
        }
        if (!g.out.empty() && g.out != "-") write_text(g.out, arr.dump(2) + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
