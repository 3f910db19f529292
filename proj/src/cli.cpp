#include "rblab/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "rblab/analysis.hpp"
#include "rblab/config_io.hpp"
#include "rblab/errors.hpp"
#include "rblab/recipes.hpp"
#include "rblab/seqgen.hpp"
#include "rblab/store.hpp"
#include "rblab/trainer.hpp"

namespace rblab {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--out", f.out, "output directory (default: $RBLAB_OUT/<command>)");
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--workers", f.workers, "parallel runs (never splits a single run)")->check(CLI::PositiveNumber);
}

fs::path out_dir(const CommonFlags& f, const std::string& command) {
    if (!f.out.empty()) return f.out;
    const char* root = std::getenv("RBLAB_OUT");
    return fs::path(root && *root ? root : "rblab_out") / command;
}

json require_config(const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("--config is required for this command");
    return load_json_file(f.config);
}

/// Top-level object fields for the small analysis configs.
const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("config error at /") + key + ": missing required field");
    return j.at(key);
}

fs::path run_path(const json& doc) {
    const json& r = field(doc, "run");
    if (!r.is_string()) throw ConfigError("config error at /run: expected a string");
    return r.get<std::string>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error at /") + key + ": " + e.what());
    }
}

void cmd_gen_data(const CommonFlags& f, const std::string& kind, std::size_t count) {
    const fs::path out = out_dir(f, "gen-data");
    fs::create_directories(out);
    if (kind == "dyck") {
        DyckConfig cfg = f.config.empty() ? DyckConfig{} : dyck_config_from_json(load_json_file(f.config));
        if (f.seed) cfg.seed = *f.seed;
        DyckSampler sampler(cfg);
        std::vector<DyckSentence> sentences;
        for (std::size_t i = 0; i < count; ++i) sentences.push_back(sampler.next());
        write_dyck_jsonl(sentences, out / "dyck.jsonl");
    } else if (kind == "letters") {
        const std::uint64_t seed = f.seed.value_or(0);
        LetterDatasetConfig cfg = f.config.empty() ? default_letter_config(seed) : letter_config_from_json(load_json_file(f.config));
        if (f.seed) cfg.seed = *f.seed;
        const auto data = generate_letter_dataset(cfg);
        write_letters_jsonl(data.train, cfg, out / "train.jsonl");
        write_letters_jsonl(data.validation, cfg, out / "validation.jsonl");
        write_letters_jsonl(data.test, cfg, out / "test.jsonl");
    } else {
        BoolDatasetConfig cfg = bool_dataset_config_from_json(require_config(f));
        if (f.seed) cfg.seed = *f.seed;
        const auto data = generate(cfg);
        for (const auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"validation", &data.validation},
                                          std::pair{"test", &data.test}}) {
            write_jsonl(*split, out / (std::string(name) + ".jsonl"));
            write_dataset_binary(*split, out / name);
        }
    }
    std::cout << "wrote " << kind << " data to " << out.string() << '\n';
}

ExperimentConfig experiment_from_flags(const CommonFlags& f) {
    ExperimentConfig cfg = experiment_config_from_json(require_config(f));
    if (f.seed) cfg.seed = *f.seed;
    return cfg;
}

void cmd_train(const CommonFlags& f) {
    const auto cfg = experiment_from_flags(f);
    RunOptions ro;
    ro.out_dir = out_dir(f, "train");
    ro.keep_snapshots = false;
    const auto rec = run(cfg, ro);
    std::cout << rec.run_id << ": " << to_string(rec.status) << " after " << rec.final_step << " steps";
    for (std::size_t i = 0; i < rec.evals.back().accuracy.size(); ++i)
        std::cout << (i ? ", " : "; test accuracy ") << rec.evals.back().accuracy[i];
    std::cout << '\n';
    if (rec.status != RunStatus::Completed) throw NumericError(rec.message);
}

void cmd_sweep(const CommonFlags& f) {
    const json doc = require_config(f);
    SweepSpec spec;
    spec.base = field(doc, "base");
    if (f.seed) spec.base["seed"] = *f.seed;
    for (const auto& a : get_or<json>(doc, "axes", json::array())) {
        if (!a.contains("path") || !a.contains("values") || !a.at("values").is_array())
            throw ConfigError("config error at /axes: each axis needs a path and a values array");
        spec.axes.push_back({a.at("path").get<std::string>(), a.at("values").get<std::vector<json>>()});
    }
    const auto cells = expand_grid(spec);
    SweepOptions so;
    so.workers = f.workers;
    so.out_dir = out_dir(f, "sweep");
    so.keep_snapshots = false;
    const auto result = sweep(cells, so);
    std::size_t failed = 0;
    for (const auto& e : result.errors) failed += !e.empty();
    std::cout << cells.size() - failed << "/" << cells.size() << " cells completed\n";
    if (failed) throw std::runtime_error(std::to_string(failed) + " sweep cells failed; see sweep_summary.csv");
}

void cmd_analyze(const CommonFlags& f, const std::string& run_flag) {
    const json doc = f.config.empty() ? json::object() : load_json_file(f.config);
    const fs::path dir = run_flag.empty() ? run_path(doc) : fs::path(run_flag);
    const auto rec = read_run(dir);
    const auto data = generate(rec.config.dataset);
    const bool patterns = get_or(doc, "patterns", true);
    const std::size_t k_max = get_or<std::size_t>(doc, "pca_k_max", 8);
    const auto& features = rec.config.dataset.features;
    std::vector<ReportRow> rows;
    const std::string layer = penultimate_layer(rec.config.mlp);
    for (const auto& p : variance_trajectory(rec, data, patterns)) {
        const std::string name = features[p.feature].name.empty() ? std::to_string(p.feature) : features[p.feature].name;
        rows.push_back({rec.run_id, p.step, layer, name, "r2_raw", p.r2_raw});
        rows.push_back({rec.run_id, p.step, layer, name, "r2_final_normalized", p.r2_final_normalized});
        if (patterns) rows.push_back({rec.run_id, p.step, layer, name, "pattern_r2_raw", p.pattern_r2_raw});
    }
    const auto& val = rec.final_snapshot("validation");
    const auto& test = rec.final_snapshot("test");
    const auto z = standardize(val.as_double(), val.as_double());
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
        const std::string name = features[fi].name.empty() ? std::to_string(fi) : features[fi].name;
        const Vector labels = data.validation.labels.col(static_cast<Eigen::Index>(fi));
        rows.push_back({rec.run_id, rec.final_step, layer, name, "sparsity", sparsity_score(z.reps, linalg::as_span(labels))});
        const auto pu = per_unit_variance(val, test, feature_column(data.validation.labels, fi),
                                          feature_column(data.test.labels, fi));
        rows.push_back({rec.run_id, rec.final_step, layer, name, "per_unit_aggregate", pu.aggregate});
        for (std::size_t k = 1; k <= std::min<std::size_t>(k_max, static_cast<std::size_t>(test.matrix.cols())); ++k) {
            rows.push_back({rec.run_id, rec.final_step, layer, name, "pca_keep_top_" + std::to_string(k),
                            pca_readout(rec.final_model, test, data.test.labels, k, PcaMode::KeepTop)[fi]});
            rows.push_back({rec.run_id, rec.final_step, layer, name, "pca_drop_top_" + std::to_string(k),
                            pca_readout(rec.final_model, test, data.test.labels, k, PcaMode::DropTop)[fi]});
        }
    }
    const fs::path out = out_dir(f, "analyze");
    std::vector<std::string> names;
    for (std::size_t fi = 0; fi < features.size(); ++fi)
        names.push_back(features[fi].name.empty() ? "f" + std::to_string(fi) : features[fi].name);
    write_text_atomic(out / "report.csv", report_csv(rows));
    write_text_atomic(out / "pca_projection.csv", pca_projection_csv(test, data.test.labels, names));
    std::cout << "wrote " << rows.size() << " report rows to " << (out / "report.csv").string() << '\n';
}

void cmd_rsa(const CommonFlags& f) {
    const json doc = require_config(f);
    const auto dirs = get_or<std::vector<std::string>>(doc, "runs", {});
    if (dirs.size() < 2) throw ConfigError("config error at /runs: need at least two run directories");
    const auto n_stimuli = get_or<std::size_t>(doc, "stimuli", 256);
    const std::uint64_t seed = f.seed.value_or(get_or<std::uint64_t>(doc, "seed", 0));
    std::vector<RunRecord> runs;
    for (const auto& d : dirs) runs.push_back(read_run(d));
    const auto stimuli = uniform_stimuli(runs.front().config.dataset.n_inputs, {}, n_stimuli, seed);
    std::ostringstream csv;
    csv << "run_a,run_b,metric,correlation,similarity\n";
    for (auto metric : {RdmMetric::Euclidean, RdmMetric::Cosine}) {
        std::vector<Rdm> rdms;
        for (const auto& r : runs)
            rdms.push_back(rdm(capture_snapshot(r.final_model, stimuli.inputs, r.final_model.n_hidden() - 1, r.run_id, "stimuli"),
                               metric));
        for (auto corr : {Correlation::Pearson, Correlation::Spearman})
            for (std::size_t i = 0; i < runs.size(); ++i)
                for (std::size_t j = i + 1; j < runs.size(); ++j)
                    csv << dirs[i] << ',' << dirs[j] << ',' << to_string(metric) << ',' << to_string(corr) << ','
                        << rsa_compare(rdms[i], rdms[j], corr) << '\n';
    }
    const fs::path out = out_dir(f, "rsa");
    write_text_atomic(out / "rsa.csv", csv.str());
    std::cout << "wrote " << (out / "rsa.csv").string() << '\n';
}

void cmd_intervene(const CommonFlags& f, const std::string& run_flag) {
    const json doc = f.config.empty() ? json::object() : load_json_file(f.config);
    const fs::path dir = run_flag.empty() ? run_path(doc) : fs::path(run_flag);
    const auto rec = read_run(dir);
    const auto data = generate(rec.config.dataset);
    const auto feature = get_or<std::size_t>(doc, "feature", 0);
    if (feature >= rec.config.dataset.features.size()) throw ConfigError("config error at /feature: index out of range");
    std::vector<double> alphas = get_or<std::vector<double>>(doc, "alphas", {});
    if (alphas.empty())
        for (int a = 0; a <= 40; ++a) alphas.push_back(0.05 * a);
    const auto& val = rec.final_snapshot("validation");
    const auto& test = rec.final_snapshot("test");
    const auto d = steering_vector(fit_probe(feature_column(data.validation.labels, feature), val.as_double()));
    std::ostringstream csv;
    csv << "alpha,magnitude";
    for (std::size_t i = 0; i < rec.config.dataset.features.size(); ++i) csv << ",flip_" << i;
    csv << '\n';
    for (double alpha : alphas) {
        const auto r = intervene(rec.final_model, test, d.direction, alpha, feature);
        csv << alpha << ',' << r.magnitude;
        for (double x : r.flip_fraction) csv << ',' << x;
        csv << '\n';
    }
    const fs::path out = out_dir(f, "intervene");
    write_text_atomic(out / "intervention.csv", csv.str());
    std::cout << "steering vector magnitude " << d.magnitude << "; wrote " << (out / "intervention.csv").string() << '\n';
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Representation-bias laboratory: train MLPs on boolean features and analyse their representations"};
    app.require_subcommand(1);

    CommonFlags gen_flags, train_flags, analyze_flags, sweep_flags, rsa_flags, intervene_flags, repro_flags;
    std::string kind = "bool";
    std::size_t count = 10000;
    auto* gen = app.add_subcommand("gen-data", "generate a dataset (bool, dyck or letters)");
    add_common(gen, gen_flags);
    gen->add_option("--kind", kind, "dataset kind")->check(CLI::IsMember({"bool", "dyck", "letters"}));
    gen->add_option("--count", count, "number of Dyck strings");

    auto* train = app.add_subcommand("train", "train one experiment");
    add_common(train, train_flags);

    std::string analyze_run, intervene_run;
    auto* analyze = app.add_subcommand("analyze", "variance explained, sparsity and PCA readout for a run");
    add_common(analyze, analyze_flags);
    analyze->add_option("--run", analyze_run, "run directory (overrides the config's \"run\")");

    auto* sweep_cmd = app.add_subcommand("sweep", "grid of experiments");
    add_common(sweep_cmd, sweep_flags);

    auto* rsa_cmd = app.add_subcommand("rsa", "representational similarity between runs");
    add_common(rsa_cmd, rsa_flags);

    auto* intervene_cmd = app.add_subcommand("intervene", "steering-vector interventions on a run");
    add_common(intervene_cmd, intervene_flags);
    intervene_cmd->add_option("--run", intervene_run, "run directory (overrides the config's \"run\")");

    std::string recipe;
    std::size_t n_seeds = 1;
    auto* repro = app.add_subcommand("reproduce", "run a built-in recipe end to end");
    add_common(repro, repro_flags);
    std::vector<std::string> recipe_names;
    for (auto id : all_recipes()) recipe_names.push_back(to_string(id));
    repro->add_option("recipe", recipe, "recipe name")->required()->check(CLI::IsMember(recipe_names));
    repro->add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) cmd_gen_data(gen_flags, kind, count);
        if (*train) cmd_train(train_flags);
        if (*analyze) cmd_analyze(analyze_flags, analyze_run);
        if (*sweep_cmd) cmd_sweep(sweep_flags);
        if (*rsa_cmd) cmd_rsa(rsa_flags);
        if (*intervene_cmd) cmd_intervene(intervene_flags, intervene_run);
        if (*repro) {
            ReproduceOptions o;
            o.seed = repro_flags.seed.value_or(0);
            o.n_seeds = n_seeds;
            o.workers = repro_flags.workers;
            o.out = repro_flags.out.empty() ? out_dir(repro_flags, "reproduce") / recipe : fs::path(repro_flags.out);
            reproduce(recipe_from_string(recipe), o);
            std::cout << "wrote " << (o.out / "summary.csv").string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace rblab
