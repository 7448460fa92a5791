// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "propinfer/bench.hpp"
#include "propinfer/errors.hpp"
#include "propinfer/features.hpp"
#include "propinfer/gbt.hpp"
#include "propinfer/gen_attack.hpp"
#include "propinfer/parallel.hpp"
#include "propinfer/rng.hpp"
#include "propinfer/shadow_attack.hpp"
#include "propinfer/synth_lab.hpp"

using namespace propinfer;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %d. %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    double m = mean_of(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::sqrt(var / static_cast<double>(v.size() - 1));
}

// 1. black-box generation estimate converges: mean |error| < 0.02 at 500
// generations per prompt over 50 seeds and targets {0.3, 0.5, 0.7}
void criterion_generation_convergence() {
    auto vocab = default_lab_vocab();
    auto prop = lab_property(vocab);
    Labeler labeler = [prop](const std::string& t) { return keyword_label(t, prop); };
    const std::vector<double> targets{0.3, 0.5, 0.7};
    const std::size_t n_seeds = 50;

    std::vector<double> errors(targets.size() * n_seeds);
    parallel_for(errors.size(), [&](std::size_t k) {
        double r = targets[k / n_seeds];
        std::uint64_t seed = k % n_seeds;
        auto gen = build_generator(r, Mode::ChatCompletionMode, vocab, 30,
                                   mix_seed(0xACCE5501u, k));
        auto est = run_generation_attack(synthetic_endpoint(gen), default_prompt_set(), 500,
                                         labeler, mix_seed(seed, k));
        errors[k] = std::abs(est.value - r);
    });
    double mae = mean_of(errors);
    report(1, "generation-attack convergence", mae < 0.02,
           "mean |error| " + fmt(mae) + " over 150 runs at 500/prompt (< 0.02)");
}

// 2. mode asymmetry for an input-side-only property: QA-mode MAE exceeds
// chat-completion MAE by at least 0.15, and QA containment is constant in r
void criterion_mode_asymmetry() {
    auto vocab = default_lab_vocab(/*x_only=*/true);
    PropertySpec prop;
    prop.name = "xsig";
    prop.positive_keywords = vocab.x_signal_pos;
    prop.negative_keywords = vocab.x_signal_neg;
    prop.target_side = TargetSide::InputSide;
    Labeler labeler = [prop](const std::string& t) { return keyword_label(t, prop); };

    const std::vector<double> targets{0.3, 0.7};
    const std::size_t n_seeds = 20;
    std::vector<double> qa_err(targets.size() * n_seeds), cc_err(targets.size() * n_seeds);
    parallel_for(qa_err.size(), [&](std::size_t k) {
        double r = targets[k / n_seeds];
        for (Mode mode : {Mode::QAMode, Mode::ChatCompletionMode}) {
            auto gen = build_generator(r, mode, vocab, 30, mix_seed(0xACCE5502u, k,
                                                                    mode == Mode::QAMode));
            auto est = run_generation_attack(synthetic_endpoint(gen), default_prompt_set(),
                                             300, labeler, mix_seed(k, 3));
            (mode == Mode::QAMode ? qa_err : cc_err)[k] = std::abs(est.value - r);
        }
    });
    double gap = mean_of(qa_err) - mean_of(cc_err);

    bool constant = true;
    double ref = -1.0;
    for (double r : {0.0, 0.2, 0.5, 0.8, 1.0}) {
        auto gen = build_generator(r, Mode::QAMode, vocab, 30, 1);
        double c = gen->expected_containment(vocab.x_signal_pos.front());
        if (ref < 0.0) ref = c;
        else if (c != ref) constant = false;
    }
    report(2, "mode asymmetry (input-side signal)", gap >= 0.15 && constant,
           "QA MAE " + fmt(mean_of(qa_err)) + " - CC MAE " + fmt(mean_of(cc_err)) + " = " +
               fmt(gap) + " (>= 0.15); QA containment constant in r: " +
               (constant ? "yes" : "no"));
}

// 3. word-frequency shadow attack end to end: 7 ratios x 5 repeats, target
// ratio 0.5, d = 10; |error| <= 0.1 in at least 90% of 20 seeded runs
void criterion_wordfreq_end_to_end() {
    auto vocab = default_lab_vocab();
    auto prop = lab_property(vocab);
    const std::vector<double> ratios{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const std::size_t n_runs = 20;

    std::vector<int> hits(n_runs, 0);
    parallel_for(n_runs, [&](std::size_t run) {
        std::uint64_t seed = mix_seed(0xACCE5503u, run);
        auto aux_gen = build_generator(0.5, Mode::ChatCompletionMode, vocab, 30, seed);
        LabeledDataset aux{aux_gen->generate_samples(3000, mix_seed(seed, 1))};
        label_dataset(aux, prop);
        auto plan = build_shadow_plan(aux, prop.name, ratios, 5, 200, mix_seed(seed, 2));
        SyntheticFactory factory(vocab, 30);
        auto target = build_generator(0.5, Mode::ChatCompletionMode, vocab, 30,
                                      mix_seed(seed, 3));
        auto rep = run_wordfreq_shadow_attack(plan, factory, Mode::ChatCompletionMode,
                                              synthetic_endpoint(target), default_prompt_set(),
                                              800, 10, {}, prop.name, mix_seed(seed, 4));
        hits[run] = std::abs(rep.prediction - 0.5) <= 0.1 ? 1 : 0;
    });
    int ok = 0;
    for (int h : hits) ok += h;
    report(3, "word-frequency shadow attack", ok >= 18,
           std::to_string(ok) + "/20 runs within 0.1 of the true ratio (need >= 18)");
}

// 4. keyword selection agrees exactly with an independent least-squares
// F ranking on a 35 x 200 matrix with 5 planted correlated columns
void criterion_selection_oracle() {
    SplitRng rng(0xACCE5504u);
    const int rows = 35, cols = 200, top = 5;
    FrequencyMatrix m;
    m.values.resize(rows, cols);
    Eigen::VectorXd ratios(rows);
    for (int i = 0; i < rows; ++i) ratios[i] = 0.2 + 0.6 * (i % 7) / 6.0;
    for (int c = 0; c < cols; ++c) {
        char name[8];
        std::snprintf(name, sizeof(name), "w%03d", c);
        m.vocab.words.push_back(name);
        bool planted = c % 40 == 7;  // 5 planted columns
        for (int i = 0; i < rows; ++i)
            m.values(i, c) = planted ? 0.8 * ratios[i] + 0.02 * rng.next_unit()
                                     : rng.next_unit();
    }
    for (int i = 0; i < rows; ++i) m.model_ids.push_back("s" + std::to_string(i));

    // independent oracle: per-column simple linear regression F test
    std::vector<std::pair<double, std::string>> ranked;
    for (int c = 0; c < cols; ++c) {
        Eigen::VectorXd x = m.values.col(c);
        double mx = x.mean(), my = ratios.mean();
        double sxx = (x.array() - mx).square().sum();
        double syy = (ratios.array() - my).square().sum();
        double sxy = ((x.array() - mx) * (ratios.array() - my)).sum();
        double f;
        if (sxx == 0.0 || syy == 0.0) {
            f = 0.0;
        } else {
            double ssr = sxy * sxy / sxx;
            double sse = syy - ssr;
            f = sse <= syy * 1e-15 ? std::numeric_limits<double>::infinity()
                                   : ssr * (rows - 2) / sse;
        }
        ranked.emplace_back(f, m.vocab.words[static_cast<std::size_t>(c)]);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    auto sel = select_keywords(m, ratios, top);
    bool match = sel.keywords.size() == top;
    bool planted_found = true;
    for (int k = 0; k < top && match; ++k) {
        if (sel.keywords[static_cast<std::size_t>(k)] != ranked[static_cast<std::size_t>(k)].second)
            match = false;
        int idx = std::stoi(ranked[static_cast<std::size_t>(k)].second.substr(1));
        if (idx % 40 != 7) planted_found = false;
    }
    report(4, "keyword-selection oracle equivalence", match && planted_found,
           match ? "top-5 identical to the direct least-squares ranking"
                 : "rankings diverge");
}

// 5. perplexity exactness on a uniform 16-word model and mixture logprobs
void criterion_perplexity_exactness() {
    VocabSpec uv;
    for (int i = 0; i < 16; ++i) uv.neutral_words.push_back("u" + std::to_string(i));
    auto uni = build_generator(0.5, Mode::ChatCompletionMode, uv, 8, 1);
    auto ep = synthetic_endpoint(uni);

    SplitRng rng(0xACCE5505u);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::string text;
        auto len = 1 + rng.uniform_below(16);
        for (std::size_t i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += uv.neutral_words[rng.uniform_below(16)];
        }
        worst = std::max(worst, std::abs(sequence_perplexity(ep, text) - 16.0));
    }

    auto mixed = build_generator(0.5, Mode::ChatCompletionMode, default_lab_vocab(), 8, 2);
    auto mep = synthetic_endpoint(mixed);
    double worst_lp = 0.0;
    for (const std::string tok : {"female", "male", "w042", "estrogen"}) {
        Side side = tok == "estrogen" ? Side::Output : Side::Input;
        std::string text = side == Side::Input ? tok : "w000 w001 w002 w003 w004 w005 w006 "
                                                       "w007 " + tok;
        auto lps = score_logprobs(mep, text);
        worst_lp = std::max(worst_lp,
                            std::abs(lps.back() - mixed->exact_token_logprob(tok, side)));
    }
    report(5, "perplexity exactness", worst <= 1e-9 && worst_lp <= 1e-12,
           "max perplexity deviation " + fmt(worst) + " (<= 1e-9), max logprob deviation " +
               fmt(worst_lp) + " (<= 1e-12)");
}

// canned model emitting fixed label words so estimator identities are exact
class CannedModel : public TextModel {
public:
    std::string id() const override { return "canned"; }
    std::vector<std::string> generate(const std::string& prompt, std::size_t n,
                                      const DecodeParams&, std::uint64_t) override {
        std::size_t ones = prompt == "pa" ? 1 : 2;
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(i < ones ? "one" : "zero");
        return out;
    }
    std::optional<std::vector<double>> token_logprobs(const std::string&) override {
        return std::nullopt;
    }
};

// 6. estimator identities
void criterion_estimator_identities() {
    using LV = LabelValue;
    bool ok = true;
    std::string detail;

    auto e = estimate_ratio_per_prompt({LV::One, LV::Zero, LV::One, LV::NotApplicable});
    ok = ok && e.rhat == 2.0 / 3.0 && e.valid_count == 3 && e.na_count == 1;

    bool threw = false;
    try {
        estimate_ratio_per_prompt({LV::NotApplicable, LV::NotApplicable});
    } catch (const AllNotApplicable&) {
        threw = true;
    }
    ok = ok && threw;

    ModelEndpoint ep;
    ep.model = std::make_shared<CannedModel>();
    PromptSet ps;
    ps.prompts = {"pa", "pb"};
    Labeler labeler = [](const std::string& t) {
        return t == "one" ? LV::One : LV::Zero;
    };
    auto agg = run_generation_attack(ep, ps, 5, labeler, 0);
    ok = ok && agg.per_prompt[0].rhat == 0.2 && agg.per_prompt[1].rhat == 0.4 &&
         agg.value == (0.2 + 0.4) / 2.0;

    double m = mae(0.3173, 0.30);
    ok = ok && m == std::abs(0.3173 - 0.30) && std::abs(m - 0.0173) < 1e-12;

    report(6, "estimator identities", ok,
           ok ? "per-prompt 2/3, aggregate 0.3, mae(0.3173, 0.30) = 0.0173"
              : "an identity failed");
}

// 7. subsampling exactness over 1000 random feasible pairs
void criterion_subsampling_exactness() {
    LabeledDataset pool;
    for (int i = 0; i < 1000; ++i) {
        Sample s;
        s.input = "in " + std::to_string(i);
        s.output = "out";
        s.labels["p"] = i < 500 ? LabelValue::One : LabelValue::Zero;
        pool.samples.push_back(s);
    }
    SplitRng rng(0xACCE5507u);
    bool ok = true;
    for (int t = 0; t < 1000 && ok; ++t) {
        double r = rng.next_unit();
        std::size_t n = 1 + rng.uniform_below(400);
        auto want = static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 0.5));
        std::uint64_t seed = rng.next_u64();
        auto a = subsample_to_ratio(pool, "p", r, n, seed);
        auto b = subsample_to_ratio(pool, "p", r, n, seed);
        std::size_t ones = 0;
        for (const auto& s : a.samples)
            if (s.labels.at("p") == LabelValue::One) ++ones;
        ok = a.samples.size() == n && ones == want && a.samples == b.samples;
    }
    report(7, "subsampling exactness", ok,
           ok ? "1000 random pairs achieve round(r*n)/n exactly and deterministically"
              : "a pair missed its exact ratio or determinism");
}

// 8. meta-regressor properties on 100 random small datasets
void criterion_meta_regressor() {
    bool ok = true;
    SplitRng rng(0xACCE5508u);
    for (int t = 0; t < 100 && ok; ++t) {
        Eigen::Index rows = 8 + static_cast<Eigen::Index>(rng.uniform_below(20));
        Eigen::Index cols = 1 + static_cast<Eigen::Index>(rng.uniform_below(4));
        Eigen::MatrixXd X(rows, cols);
        Eigen::VectorXd y(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = rng.next_unit();
            y[i] = 0.7 * X(i, 0) + 0.2 * rng.next_unit();
        }
        GbtParams params;
        params.n_rounds = 30;
        auto model = MetaRegressor::fit(X, y, params);
        const auto& mse = model.training_mse();
        for (std::size_t k = 1; k < mse.size(); ++k)
            if (mse[k] > mse[k - 1] + 1e-12) ok = false;
        auto back = MetaRegressor::from_json(model.to_json());
        for (int probe = 0; probe < 5; ++probe) {
            Eigen::VectorXd x(cols);
            for (Eigen::Index j = 0; j < cols; ++j) x[j] = 2.0 * rng.next_unit() - 0.5;
            double p = model.predict(x);
            if (p < 0.0 || p > 1.0 || back.predict(x) != p) ok = false;
        }
    }
    // constant target reproduced exactly
    Eigen::MatrixXd X(4, 1);
    X << 0.1, 0.2, 0.3, 0.4;
    Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 0.55);
    auto model = MetaRegressor::fit(X, y, {});
    Eigen::VectorXd probe(1);
    probe << 0.9;
    ok = ok && model.predict(probe) == 0.55;

    report(8, "meta-regressor properties", ok,
           ok ? "MSE nonincreasing, constant target exact, range and round-trip hold"
              : "a regressor property failed");
}

// 9. ablation monotonicity: shadow-count sweep nonincreasing (one-sided 95%),
// generation-count MAE at 2000 no worse than at 100
void criterion_ablation_monotonicity() {
    auto config = ExperimentConfig::lab_default();
    config.targets = {TargetSpec{0.35, ""}, TargetSpec{0.65, ""}};
    config.seeds.clear();
    for (std::uint64_t s = 1; s <= 20; ++s) config.seeds.push_back(s);

    AttackConfig wf;
    wf.kind = AttackKind::ShadowWordfreq;
    wf.shadow_size = 150;
    wf.n_gen = 300;
    config.attacks = {wf};
    config.aux_size = 2500;
    auto shadow_series = ablation_sweep(config, AblationAxis::ShadowCount, {14, 21, 35});

    auto one_sided_ok = [](const AblationPoint& prev, const AblationPoint& next) {
        double se = std::sqrt(prev.sd_mae * prev.sd_mae / static_cast<double>(prev.n) +
                              next.sd_mae * next.sd_mae / static_cast<double>(next.n));
        return next.mean_mae <= prev.mean_mae + 1.645 * se;
    };
    bool shadow_ok = shadow_series.size() == 3 &&
                     one_sided_ok(shadow_series[0], shadow_series[1]) &&
                     one_sided_ok(shadow_series[1], shadow_series[2]);

    AttackConfig gen;
    gen.kind = AttackKind::Generation;
    config.attacks = {gen};
    auto gen_series = ablation_sweep(config, AblationAxis::GenCount, {100, 2000});
    bool gen_ok = gen_series.size() == 2 && one_sided_ok(gen_series[0], gen_series[1]);

    std::string detail = "shadow-count MAE " + fmt(shadow_series[0].mean_mae) + " -> " +
                         fmt(shadow_series[1].mean_mae) + " -> " +
                         fmt(shadow_series[2].mean_mae) + "; gen-count MAE " +
                         fmt(gen_series[0].mean_mae) + " -> " + fmt(gen_series[1].mean_mae);
    report(9, "ablation monotonicity", shadow_ok && gen_ok, detail);
}

}  // namespace

int main() {
    criterion_generation_convergence();
    criterion_mode_asymmetry();
    criterion_wordfreq_end_to_end();
    criterion_selection_oracle();
    criterion_perplexity_exactness();
    criterion_estimator_identities();
    criterion_subsampling_exactness();
    criterion_meta_regressor();
    criterion_ablation_monotonicity();
    if (g_failures > 0) {
        std::printf("%d of 9 criteria failed\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
