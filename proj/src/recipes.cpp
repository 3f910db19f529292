#include "rblab/recipes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "rblab/analysis.hpp"
#include "rblab/config_io.hpp"
#include "rblab/errors.hpp"

namespace rblab {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<RecipeId, const char*>>& recipe_names() {
    static const std::vector<std::pair<RecipeId, const char*>> names{
        {RecipeId::Fig2EasyHard, "fig2_easy_hard"},
        {RecipeId::Fig3TrainingOrder, "fig3_training_order"},
        {RecipeId::Fig4AllPatterns, "fig4_all_patterns"},
        {RecipeId::Fig5Prevalence, "fig5_prevalence"},
        {RecipeId::FigB6FourFeatures, "figB6_four_features"},
        {RecipeId::FigB7Hypers, "figB7_hypers"},
        {RecipeId::Fig8Intervention, "fig8_intervention"},
        {RecipeId::Fig9Pca, "fig9_pca"},
        {RecipeId::Fig7Rsa, "fig7_rsa"},
        {RecipeId::Fig11Downstream, "fig11_downstream"},
        {RecipeId::DyckGen, "dyck_gen"},
        {RecipeId::LettersGen, "letters_gen"},
    };
    return names;
}

// Desk-scale budgets. With 4096 training rows, sum-mod-2 over 4 of 64 inputs is
// memorized rather than learned by every optimizer we tried within 30k steps, so
// the recipes use kDeskInputs inputs; whatever the features leave over is noise.
constexpr std::uint64_t kMaxSteps = 5000;
constexpr std::uint64_t kEvalEvery = 10;
constexpr std::size_t kDeskInputs = 16;

ExperimentConfig base_config(std::uint64_t seed, std::string name, std::vector<FeatureSpec> features) {
    std::size_t used = 0;
    for (const auto& f : features)
        for (auto i : f.input_indices) used = std::max(used, i + 1);
    ExperimentConfig c;
    c.name = std::move(name);
    c.dataset.n_inputs = std::max(used, kDeskInputs);
    c.dataset.features = std::move(features);
    c.mlp.input_dim = c.dataset.n_inputs;
    c.mlp.output_dim = c.dataset.features.size();
    c.optimizer = OptimizerSpec::defaults(OptimizerKind::Adam, 1e-3);
    c.max_steps = kMaxSteps;
    c.eval_every = kEvalEvery;
    c.seed = seed;
    return c;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(9);
    s << v;
    return s.str();
}

std::vector<std::string> feature_names(const BoolDatasetConfig& d) {
    std::vector<std::string> out;
    for (std::size_t f = 0; f < d.features.size(); ++f)
        out.push_back(d.features[f].name.empty() ? to_string(d.features[f].kind) + "_" + std::to_string(f)
                                                 : d.features[f].name);
    return out;
}

/// Runs the cells through the sweep runner and keeps the successful records.
std::vector<RunRecord> run_cells(const std::vector<ExperimentConfig>& cells, const ReproduceOptions& o,
                                 const std::string& subdir) {
    SweepOptions so;
    so.workers = o.workers;
    so.out_dir = o.out / subdir;
    auto result = sweep(cells, so);
    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (result.records[i])
            out.push_back(std::move(*result.records[i]));
        else
            std::cerr << "cell " << cells[i].name << " failed: " << result.errors[i] << '\n';
    }
    return out;
}

std::vector<std::uint64_t> seed_list(const ReproduceOptions& o) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < o.n_seeds; ++i) seeds.push_back(o.seed + i);
    return seeds;
}

double final_accuracy(const RunRecord& r, std::size_t f) { return r.evals.back().accuracy.at(f); }

/// Accuracy from the last evaluation at or before `step`.
const EvalPoint& eval_at(const RunRecord& r, std::uint64_t step) {
    const EvalPoint* best = &r.evals.front();
    for (const auto& e : r.evals)
        if (e.step <= step) best = &e;
    return *best;
}

void write_csv(const fs::path& path, const std::string& text) { write_text_atomic(path, text); }

void reproduce_fig2(const ReproduceOptions& o) {
    std::vector<ExperimentConfig> cells;
    for (auto s : seed_list(o)) cells.push_back(fig2_config(s));
    auto records = run_cells(cells, o, "runs");
    std::ostringstream csv;
    csv << "seed,step,easy_accuracy,hard_accuracy,easy_r2,hard_r2,easy_r2_normalized,hard_r2_normalized\n";
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto traj = variance_trajectory(r, data);
        std::map<std::uint64_t, std::vector<const TrajectoryPoint*>> by_step;
        for (const auto& p : traj) by_step[p.step].push_back(&p);
        for (const auto& [step, pts] : by_step) {
            const auto& e = eval_at(r, step);
            csv << r.config.seed << ',' << step << ',' << fmt(e.accuracy[0]) << ',' << fmt(e.accuracy[1]) << ','
                << fmt(pts[0]->r2_raw) << ',' << fmt(pts[1]->r2_raw) << ',' << fmt(pts[0]->r2_final_normalized) << ','
                << fmt(pts[1]->r2_final_normalized) << '\n';
        }
        write_csv(o.out / ("pca_seed" + std::to_string(r.config.seed) + ".csv"),
                  pca_projection_csv(r.final_snapshot("test"), data.test.labels, feature_names(r.config.dataset)));
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_training_order(const ReproduceOptions& o, bool patterns) {
    std::vector<ExperimentConfig> cells;
    const std::vector<TrainingOrder> orders{TrainingOrder::Simultaneous, TrainingOrder::PretrainEasy,
                                            TrainingOrder::PretrainHard};
    for (auto s : seed_list(o))
        for (auto order : orders) cells.push_back(training_order_config(s, order));
    auto records = run_cells(cells, o, "runs");
    std::ostringstream csv;
    csv << "seed,order,feature,accuracy,r2_raw" << (patterns ? ",pattern_r2_raw" : "") << '\n';
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto& val = r.final_snapshot("validation");
        const auto& test = r.final_snapshot("test");
        const auto names = feature_names(r.config.dataset);
        for (std::size_t f = 0; f < names.size(); ++f) {
            const auto ve = variance_explained(val, test, feature_column(data.validation.labels, f),
                                               feature_column(data.test.labels, f));
            csv << r.config.seed << ',' << r.config.name << ',' << names[f] << ',' << fmt(final_accuracy(r, f)) << ','
                << fmt(ve.r2_raw);
            if (patterns)
                csv << ','
                    << fmt(variance_explained_patterns(r.config.dataset.features[f], val, test, data.validation.inputs,
                                                       data.test.inputs)
                               .r2_raw);
            csv << '\n';
        }
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_features(const ReproduceOptions& o, bool prevalence) {
    std::vector<ExperimentConfig> cells;
    for (auto s : seed_list(o)) cells.push_back(prevalence ? prevalence_config(s) : four_feature_config(s));
    auto records = run_cells(cells, o, "runs");
    std::ostringstream csv;
    csv << "seed,feature,kind,prevalence,accuracy,r2_raw\n";
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto& val = r.final_snapshot("validation");
        const auto& test = r.final_snapshot("test");
        const auto names = feature_names(r.config.dataset);
        for (std::size_t f = 0; f < names.size(); ++f) {
            const auto ve = variance_explained(val, test, feature_column(data.validation.labels, f),
                                               feature_column(data.test.labels, f));
            const auto& spec = r.config.dataset.features[f];
            csv << r.config.seed << ',' << names[f] << ',' << to_string(spec.kind) << ',' << fmt(spec.prevalence) << ','
                << fmt(final_accuracy(r, f)) << ',' << fmt(ve.r2_raw) << '\n';
        }
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_hypers(const ReproduceOptions& o) {
    auto cells = expand_grid(hyper_sweep(o.seed));
    auto records = run_cells(cells, o, "cells");
    std::ostringstream csv;
    csv << "name,optimizer,dropout_rate,status,final_step,easy_accuracy,hard_accuracy,easy_r2,hard_r2\n";
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto& val = r.final_snapshot("validation");
        const auto& test = r.final_snapshot("test");
        double r2[2] = {NAN, NAN};
        for (std::size_t f = 0; f < 2; ++f) {
            try {
                r2[f] = variance_explained(val, test, feature_column(data.validation.labels, f),
                                           feature_column(data.test.labels, f))
                            .r2_raw;
            } catch (const std::exception&) {
            }
        }
        csv << r.config.name << ',' << to_string(r.config.optimizer.kind) << ',' << fmt(r.config.mlp.dropout_rate) << ','
            << to_string(r.status) << ',' << r.final_step << ',' << fmt(final_accuracy(r, 0)) << ','
            << fmt(final_accuracy(r, 1)) << ',' << fmt(r2[0]) << ',' << fmt(r2[1]) << '\n';
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_intervention(const ReproduceOptions& o) {
    std::vector<ExperimentConfig> cells;
    for (auto s : seed_list(o)) cells.push_back(fig2_config(s));
    auto records = run_cells(cells, o, "runs");
    std::ostringstream csv;
    csv << "seed,steered,alpha,magnitude,easy_flip,hard_flip\n";
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto& val = r.final_snapshot("validation");
        const auto& test = r.final_snapshot("test");
        for (std::size_t f = 0; f < 2; ++f) {
            const auto d = steering_vector(fit_probe(feature_column(data.validation.labels, f), val.as_double()));
            for (int a = 0; a <= 40; ++a) {
                const double alpha = 0.05 * a;
                const auto res = intervene(r.final_model, test, d.direction, alpha, f);
                csv << r.config.seed << ',' << (f == 0 ? "easy" : "hard") << ',' << fmt(alpha) << ','
                    << fmt(res.magnitude) << ',' << fmt(res.flip_fraction[0]) << ',' << fmt(res.flip_fraction[1]) << '\n';
            }
        }
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_pca(const ReproduceOptions& o) {
    std::vector<ExperimentConfig> cells;
    for (auto s : seed_list(o)) cells.push_back(fig2_config(s));
    auto records = run_cells(cells, o, "runs");
    std::ostringstream csv;
    csv << "seed,mode,k,easy_accuracy,hard_accuracy\n";
    for (const auto& r : records) {
        const auto data = generate(r.config.dataset);
        const auto& test = r.final_snapshot("test");
        for (auto mode : {PcaMode::KeepTop, PcaMode::DropTop})
            for (std::size_t k = 0; k <= 16; ++k) {
                const auto acc = pca_readout(r.final_model, test, data.test.labels, k, mode);
                csv << r.config.seed << ',' << to_string(mode) << ',' << k << ',' << fmt(acc[0]) << ',' << fmt(acc[1])
                    << '\n';
            }
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_rsa(const ReproduceOptions& o) {
    const auto tasks = rsa_tasks();
    std::vector<ExperimentConfig> cells;
    for (const auto& t : tasks)
        for (auto s : seed_list(o)) cells.push_back(rsa_config(t, s));
    auto records = run_cells(cells, o, "runs");
    if (records.empty()) throw std::runtime_error("rsa: every training run failed");
    const auto stimuli = uniform_stimuli(records.front().config.dataset.n_inputs, {}, 256, derive_seed(o.seed, 77));
    struct Net {
        std::string task;
        std::uint64_t seed;
        RepresentationSnapshot snap;
    };
    std::vector<Net> nets;
    for (const auto& r : records) {
        const std::string task = r.config.name.substr(0, r.config.name.find('_'));
        nets.push_back({task, r.config.seed,
                        capture_snapshot(r.final_model, stimuli.inputs, r.final_model.n_hidden() - 1, r.run_id, "stimuli")});
    }
    std::ostringstream csv;
    csv << "task_a,seed_a,task_b,seed_b,metric,correlation,similarity\n";
    for (auto metric : {RdmMetric::Euclidean, RdmMetric::Cosine}) {
        std::vector<Rdm> rdms;
        for (const auto& n : nets) rdms.push_back(rdm(n.snap, metric));
        for (auto corr : {Correlation::Pearson, Correlation::Spearman})
            for (std::size_t i = 0; i < nets.size(); ++i)
                for (std::size_t j = i + 1; j < nets.size(); ++j)
                    csv << nets[i].task << ',' << nets[i].seed << ',' << nets[j].task << ',' << nets[j].seed << ','
                        << to_string(metric) << ',' << to_string(corr) << ','
                        << fmt(rsa_compare(rdms[i], rdms[j], corr)) << '\n';
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_downstream(const ReproduceOptions& o) {
    std::vector<ExperimentConfig> cells;
    for (auto s : seed_list(o)) cells.push_back(fig2_config(s));
    auto records = run_cells(cells, o, "runs");
    const DownstreamSetup setup;
    std::ostringstream csv;
    csv << "seed,predictivity,classifier,preference\n";
    for (const auto& r : records) {
        const std::size_t layer = r.final_model.n_hidden() - 1;
        for (double q : setup.predictivities) {
            const auto joint = downstream_dataset(r.config.dataset, q, DownstreamMode::Joint, setup.train_size,
                                                  derive_seed(r.config.seed, 200));
            const auto conflict = downstream_dataset(r.config.dataset, q, DownstreamMode::Conflict, setup.conflict_size,
                                                     derive_seed(r.config.seed, 201));
            const Matrix jr = capture_snapshot(r.final_model, joint.inputs, layer, r.run_id, "joint").as_double();
            const Matrix cr = capture_snapshot(r.final_model, conflict.inputs, layer, r.run_id, "conflict").as_double();
            const Vector g = joint.labels.col(joint.labels.cols() - 1);
            const Vector easy = conflict.labels.col(0);
            for (auto kind : {DownstreamClassifier::Linear, DownstreamClassifier::Mlp1Hidden}) {
                DownstreamOptions opts;
                opts.seed = derive_seed(r.config.seed, 202);
                const double pref = downstream_bias(jr, linalg::as_span(g), cr, linalg::as_span(easy), kind, opts);
                csv << r.config.seed << ',' << fmt(q) << ',' << to_string(kind) << ',' << fmt(pref) << '\n';
            }
        }
    }
    write_csv(o.out / "summary.csv", csv.str());
}

void reproduce_dyck(const ReproduceOptions& o) {
    DyckConfig cfg;
    cfg.seed = o.seed;
    DyckSampler sampler(cfg);
    std::vector<DyckSentence> sentences;
    std::size_t valid = 0;
    int max_depth = 0;
    std::size_t max_len = 0;
    for (int i = 0; i < 10000; ++i) {
        sentences.push_back(sampler.next());
        valid += validate_dyck(sentences.back().tokens, cfg);
        max_depth = std::max(max_depth, sentences.back().features.max_depth);
        max_len = std::max(max_len, sentences.back().tokens.size());
    }
    fs::create_directories(o.out);
    write_dyck_jsonl(sentences, o.out / "dyck.jsonl");
    write_csv(o.out / "summary.csv", "samples,valid,max_depth,max_length\n" + std::to_string(sentences.size()) + ',' +
                                         std::to_string(valid) + ',' + std::to_string(max_depth) + ',' +
                                         std::to_string(max_len) + '\n');
}

void reproduce_letters(const ReproduceOptions& o) {
    const auto cfg = default_letter_config(o.seed);
    const auto data = generate_letter_dataset(cfg);
    fs::create_directories(o.out);
    write_letters_jsonl(data.train, cfg, o.out / "train.jsonl");
    write_letters_jsonl(data.validation, cfg, o.out / "validation.jsonl");
    write_letters_jsonl(data.test, cfg, o.out / "test.jsonl");
    std::ostringstream csv;
    csv << "feature,train_mean,validation_mean,test_mean\n";
    for (std::size_t f = 0; f < cfg.features.size(); ++f) {
        const auto c = static_cast<Eigen::Index>(f);
        csv << cfg.features[f].name() << ',' << fmt(data.train.labels.col(c).mean()) << ','
            << fmt(data.validation.labels.col(c).mean()) << ',' << fmt(data.test.labels.col(c).mean()) << '\n';
    }
    write_csv(o.out / "summary.csv", csv.str());
}

}  // namespace

std::string to_string(RecipeId id) {
    for (const auto& [r, name] : recipe_names())
        if (r == id) return name;
    return "?";
}

RecipeId recipe_from_string(const std::string& name) {
    for (const auto& [r, n] : recipe_names())
        if (name == n) return r;
    throw ConfigError("unknown recipe '" + name + "'");
}

const std::vector<RecipeId>& all_recipes() {
    static const std::vector<RecipeId> ids = [] {
        std::vector<RecipeId> v;
        for (const auto& [r, n] : recipe_names()) v.push_back(r);
        return v;
    }();
    return ids;
}

std::string to_string(TrainingOrder order) {
    switch (order) {
        case TrainingOrder::Simultaneous: return "simultaneous";
        case TrainingOrder::PretrainEasy: return "pretrain_easy";
        case TrainingOrder::PretrainHard: return "pretrain_hard";
    }
    return "?";
}

ExperimentConfig fig2_config(std::uint64_t seed) {
    auto c = base_config(seed, "fig2",
                         FeatureLayout()
                             .add(FeatureKind::Linear, 0.5, 4, 3, "easy")
                             .add(FeatureKind::SumMod2_4, 0.5, 1, 3, "hard")
                             .build());
    return c;
}

ExperimentConfig training_order_config(std::uint64_t seed, TrainingOrder order) {
    auto c = fig2_config(seed);
    c.name = to_string(order);
    if (order != TrainingOrder::Simultaneous) {
        c.regime.kind = RegimeKind::Pretrain;
        c.regime.pretrain_features = {order == TrainingOrder::PretrainEasy ? std::size_t{0} : std::size_t{1}};
    }
    return c;
}

ExperimentConfig prevalence_config(std::uint64_t seed) {
    return base_config(seed, "prevalence",
                       FeatureLayout()
                           .add(FeatureKind::Linear, 0.5, 4, 3, "easy_common")
                           .add(FeatureKind::Linear, 0.1, 4, 3, "easy_rare")
                           .add(FeatureKind::SumMod2_4, 0.5, 1, 3, "hard_common")
                           .add(FeatureKind::SumMod2_4, 0.1, 1, 3, "hard_rare")
                           .build());
}

ExperimentConfig four_feature_config(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 300));
    const FeatureKind pool[] = {FeatureKind::Linear, FeatureKind::And, FeatureKind::Or, FeatureKind::Xor2,
                                FeatureKind::SumMod2_4};
    FeatureLayout layout;
    for (int i = 0; i < 4; ++i) {
        const auto kind = pool[rng.below(5)];
        // AND/OR over 3 inputs are unbalanced by construction; labels are drawn
        // balanced and inputs conditioned, as for every other kind.
        layout.add(kind, 0.5, kind == FeatureKind::Linear ? 4 : 1, 3, to_string(kind) + "_" + std::to_string(i));
    }
    return base_config(seed, "four_features", layout.build());
}

SweepSpec hyper_sweep(std::uint64_t seed) {
    SweepSpec spec;
    spec.base = to_json(fig2_config(seed));
    spec.base["name"] = "hypers";
    std::vector<nlohmann::json> optimizers;
    for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adagrad, OptimizerKind::Adam, OptimizerKind::AdamW,
                      OptimizerKind::Lion}) {
        // Learning rates follow common defaults for each rule.
        const double lr = kind == OptimizerKind::Sgd ? 1e-1 : kind == OptimizerKind::Adagrad ? 1e-2
                                                          : kind == OptimizerKind::Lion    ? 1e-4
                                                                                           : 1e-3;
        auto spec_k = OptimizerSpec::defaults(kind, lr);
        if (kind == OptimizerKind::AdamW || kind == OptimizerKind::Lion) spec_k.weight_decay = 1e-4;
        optimizers.push_back(to_json(spec_k));
    }
    spec.axes.push_back({"/optimizer", optimizers});
    spec.axes.push_back({"/mlp/dropout_rate", {0.0, 0.1, 0.3, 0.5}});
    return spec;
}

std::vector<RsaTask> rsa_tasks() {
    auto linear = [](std::size_t slot, const std::string& name) {
        FeatureSpec f;
        f.kind = FeatureKind::Linear;
        f.input_indices = {slot};
        f.name = name;
        return f;
    };
    auto sum = [](std::size_t slot, const std::string& name) {
        FeatureSpec f;
        f.kind = FeatureKind::SumMod2_4;
        f.input_indices = {slot, slot + 1, slot + 2, slot + 3};
        f.name = name;
        return f;
    };
    auto xor2 = [](std::size_t slot, const std::string& name) {
        FeatureSpec f;
        f.kind = FeatureKind::Xor2;
        f.input_indices = {slot, slot + 1};
        f.name = name;
        return f;
    };
    return {
        {"LL", {linear(0, "a_linear"), linear(4, "b_linear")}},
        {"LX", {linear(0, "a_linear"), xor2(4, "b_xor2")}},
        {"LS", {linear(0, "a_linear"), sum(4, "b_sum_mod2")}},
        {"SS", {sum(0, "a_sum_mod2"), sum(4, "b_sum_mod2")}},
    };
}

ExperimentConfig rsa_config(const RsaTask& task, std::uint64_t seed) {
    return base_config(seed, task.name + "_rsa", task.features);
}

nlohmann::json recipe_document(RecipeId id, std::uint64_t seed) {
    nlohmann::json doc = {{"recipe", to_string(id)}};
    switch (id) {
        case RecipeId::Fig2EasyHard:
        case RecipeId::Fig8Intervention:
        case RecipeId::Fig9Pca:
            doc["experiment"] = to_json(fig2_config(seed));
            break;
        case RecipeId::Fig3TrainingOrder:
        case RecipeId::Fig4AllPatterns:
            for (auto order : {TrainingOrder::Simultaneous, TrainingOrder::PretrainEasy, TrainingOrder::PretrainHard})
                doc["experiments"].push_back(to_json(training_order_config(seed, order)));
            break;
        case RecipeId::Fig5Prevalence:
            doc["experiment"] = to_json(prevalence_config(seed));
            break;
        case RecipeId::FigB6FourFeatures:
            doc["experiment"] = to_json(four_feature_config(seed));
            break;
        case RecipeId::FigB7Hypers: {
            const auto spec = hyper_sweep(seed);
            doc["base"] = spec.base;
            for (const auto& a : spec.axes) doc["axes"].push_back({{"path", a.path}, {"values", a.values}});
            break;
        }
        case RecipeId::Fig7Rsa:
            for (const auto& t : rsa_tasks()) doc["experiments"].push_back(to_json(rsa_config(t, seed)));
            doc["stimuli"] = {{"count", 256}, {"distribution", "uniform"}};
            break;
        case RecipeId::Fig11Downstream: {
            const DownstreamSetup setup;
            doc["experiment"] = to_json(fig2_config(seed));
            doc["predictivities"] = setup.predictivities;
            doc["train_size"] = setup.train_size;
            doc["conflict_size"] = setup.conflict_size;
            doc["classifiers"] = {"linear", "mlp_1hidden"};
            break;
        }
        case RecipeId::DyckGen: {
            DyckConfig c;
            c.seed = seed;
            doc["dyck"] = to_json(c);
            doc["samples"] = 10000;
            break;
        }
        case RecipeId::LettersGen:
            doc["letters"] = to_json(default_letter_config(seed));
            break;
    }
    return doc;
}

void reproduce(RecipeId id, const ReproduceOptions& o) {
    if (o.n_seeds == 0) throw ConfigError("reproduce: need at least one seed");
    fs::create_directories(o.out);
    write_text_atomic(o.out / "recipe.json", recipe_document(id, o.seed).dump(2) + "\n");
    switch (id) {
        case RecipeId::Fig2EasyHard: reproduce_fig2(o); break;
        case RecipeId::Fig3TrainingOrder: reproduce_training_order(o, false); break;
        case RecipeId::Fig4AllPatterns: reproduce_training_order(o, true); break;
        case RecipeId::Fig5Prevalence: reproduce_features(o, true); break;
        case RecipeId::FigB6FourFeatures: reproduce_features(o, false); break;
        case RecipeId::FigB7Hypers: reproduce_hypers(o); break;
        case RecipeId::Fig8Intervention: reproduce_intervention(o); break;
        case RecipeId::Fig9Pca: reproduce_pca(o); break;
        case RecipeId::Fig7Rsa: reproduce_rsa(o); break;
        case RecipeId::Fig11Downstream: reproduce_downstream(o); break;
        case RecipeId::DyckGen: reproduce_dyck(o); break;
        case RecipeId::LettersGen: reproduce_letters(o); break;
    }
}

}  // namespace rblab
