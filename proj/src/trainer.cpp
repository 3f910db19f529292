#include "rblab/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <malloc.h>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rblab/config_io.hpp"
#include "rblab/errors.hpp"

namespace rblab {

namespace fs = std::filesystem;

std::string to_string(RegimeKind kind) { return kind == RegimeKind::Pretrain ? "pretrain" : "simultaneous"; }

RegimeKind regime_kind_from_string(const std::string& name) {
    if (name == "simultaneous") return RegimeKind::Simultaneous;
    if (name == "pretrain") return RegimeKind::Pretrain;
    throw ContractViolation("unknown regime '" + name + "'");
}

std::string to_string(RunStatus status) { return status == RunStatus::Diverged ? "diverged" : "completed"; }

void TrainingRegime::validate(std::size_t n_features) const {
    if (kind == RegimeKind::Simultaneous) return;
    if (pretrain_features.empty() || pretrain_features.size() >= n_features)
        throw ContractViolation("regime: pretraining needs a nonempty proper subset of the features");
    std::set<std::size_t> unique(pretrain_features.begin(), pretrain_features.end());
    if (unique.size() != pretrain_features.size()) throw ContractViolation("regime: duplicate pretrain feature");
    if (*unique.rbegin() >= n_features) throw ContractViolation("regime: pretrain feature index out of range");
    if (!(pretrain_stop_accuracy > 0.5 && pretrain_stop_accuracy <= 1.0))
        throw ContractViolation("regime: pretrain_stop_accuracy must lie in (0.5, 1]");
}

std::vector<std::uint64_t> SnapshotSchedule::steps(std::uint64_t max_steps) const {
    std::set<std::uint64_t> out;
    if (!explicit_steps.empty()) {
        for (auto s : explicit_steps)
            if (s <= max_steps) out.insert(s);
    } else {
        out.insert(0);
        for (double x = 1.0; x <= static_cast<double>(max_steps); x *= log_base)
            out.insert(static_cast<std::uint64_t>(std::llround(x)));
    }
    out.insert(max_steps);
    return {out.begin(), out.end()};
}

void SnapshotSchedule::validate() const {
    if (explicit_steps.empty() && !(log_base > 1.0)) throw ContractViolation("snapshot schedule: log_base must exceed 1");
}

void ExperimentConfig::validate() const {
    dataset.validate();
    mlp.validate();
    optimizer.validate();
    snapshots.validate();
    regime.validate(dataset.features.size());
    if (mlp.input_dim != dataset.n_inputs) throw ContractViolation("config: mlp.input_dim must equal dataset.n_inputs");
    if (mlp.output_dim != dataset.features.size())
        throw ContractViolation("config: mlp.output_dim must equal the number of features");
    if (eval_every == 0) throw ContractViolation("config: eval_every must be positive");
    if (!(stop_when_all_accurate > 0.5 && stop_when_all_accurate <= 1.0))
        throw ContractViolation("config: stop_when_all_accurate must lie in (0.5, 1]");
    if (stop_patience < 1) throw ContractViolation("config: stop_patience must be positive");
}

ExperimentConfig ExperimentConfig::resolved() const {
    ExperimentConfig c = *this;
    c.dataset.seed = derive_seed(seed, 10);
    c.mlp.seed = derive_seed(seed, 11);
    return c;
}

ExperimentConfig easy_hard_config(std::uint64_t seed) {
    ExperimentConfig c;
    c.name = "easy_hard";
    c.dataset.n_inputs = 64;
    c.dataset.features = FeatureLayout()
                             .add(FeatureKind::Linear, 0.5, 4, 3, "easy")
                             .add(FeatureKind::SumMod2_4, 0.5, 1, 3, "hard")
                             .build();
    c.mlp.input_dim = 64;
    c.mlp.output_dim = 2;
    c.seed = seed;
    return c;
}

std::string layer_name(std::size_t hidden_layer) { return "hidden" + std::to_string(hidden_layer); }

std::string penultimate_layer(const MlpConfig& config) { return layer_name(config.hidden_sizes.size() - 1); }

RepresentationSnapshot capture_snapshot(const MlpF& model, const Matrix& inputs, std::size_t layer, std::string run_id,
                                        std::string split, std::uint64_t step) {
    if (layer >= model.n_hidden()) throw ContractViolation("capture_snapshot: layer out of range");
    auto trace = forward(model, MatrixF(inputs.cast<float>()), Mode::Eval);
    RepresentationSnapshot s;
    s.run_id = std::move(run_id);
    s.step = step;
    s.layer = layer_name(layer);
    s.split = std::move(split);
    s.matrix = std::move(trace.activations[layer]);
    s.stimulus_ids.resize(static_cast<std::size_t>(inputs.rows()));
    for (std::size_t i = 0; i < s.stimulus_ids.size(); ++i) s.stimulus_ids[i] = i;
    return s;
}

std::optional<std::uint64_t> RunRecord::first_step_reaching(std::size_t feature, double threshold) const {
    for (const auto& e : evals)
        if (e.accuracy.at(feature) >= threshold) return e.step;
    return std::nullopt;
}

const RepresentationSnapshot* RunRecord::find_snapshot(std::uint64_t step, const std::string& layer,
                                                       const std::string& split) const {
    for (const auto& s : snapshots)
        if (s.step == step && s.layer == layer && s.split == split) return &s;
    return nullptr;
}

const RepresentationSnapshot& RunRecord::final_snapshot(const std::string& split) const {
    const auto* s = find_snapshot(final_step, penultimate_layer(config.mlp), split);
    if (!s) throw ContractViolation("run record holds no final " + split + " snapshot");
    return *s;
}

std::vector<std::uint64_t> RunRecord::snapshot_steps() const {
    std::set<std::uint64_t> steps;
    for (const auto& s : snapshots) steps.insert(s.step);
    return {steps.begin(), steps.end()};
}

namespace {

std::string feature_label(const BoolDatasetConfig& d, std::size_t f) {
    const auto& spec = d.features[f];
    return spec.name.empty() ? to_string(spec.kind) + "_" + std::to_string(f) : spec.name;
}

std::vector<std::uint64_t> row_ids(Eigen::Index n) {
    std::vector<std::uint64_t> ids(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
}

class Trainer {
public:
    Trainer(const ExperimentConfig& cfg, const BoolDataset& data, bool keep)
        : cfg_(cfg),
          keep_(keep),
          x_train_(data.train.inputs.cast<float>()),
          y_train_(data.train.labels.cast<float>()),
          x_val_(data.validation.inputs.cast<float>()),
          x_test_(data.test.inputs.cast<float>()),
          y_test_(data.test.labels.cast<float>()),
          model_(MlpF::init(cfg.mlp)),
          opt_(cfg.optimizer),
          rng_(derive_seed(cfg.seed, 12)) {
        if (static_cast<std::size_t>(y_train_.cols()) != cfg.dataset.features.size())
            throw ContractViolation("run: dataset label width does not match the config");
        const std::size_t n_features = cfg.dataset.features.size();
        mask_.assign(n_features, 1.0);
        if (cfg.regime.kind == RegimeKind::Pretrain) {
            pretraining_ = true;
            mask_.assign(n_features, 0.0);
            for (auto f : cfg.regime.pretrain_features) mask_[f] = 1.0;
        }
        const auto sched = cfg.snapshots.steps(cfg.max_steps);
        schedule_.insert(sched.begin(), sched.end());
        order_.resize(static_cast<std::size_t>(x_train_.rows()));
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<Eigen::Index>(i);
        cursor_ = order_.size();
    }

    RunRecord run() {
        RunRecord rec;
        rec.config = cfg_;
        rec.run_id = cfg_.name + "-seed" + std::to_string(cfg_.seed);
        std::uint64_t step = 0;
        evaluate(rec, step);
        capture(rec, step);
        int streak = 0;
        int pretrain_streak = 0;
        while (step < cfg_.max_steps) {
            try {
                train_step();
            } catch (const NumericError& e) {
                rec.status = RunStatus::Diverged;
                rec.message = "step " + std::to_string(step + 1) + ": " + e.what();
                break;
            }
            ++step;
            if (!model_.all_finite()) {
                rec.status = RunStatus::Diverged;
                rec.message = "step " + std::to_string(step) + ": non-finite parameters";
                break;
            }
            bool stop = false;
            if (step % cfg_.eval_every == 0) {
                const auto& acc = evaluate(rec, step).accuracy;
                if (pretraining_) {
                    bool done = true;
                    for (auto f : cfg_.regime.pretrain_features) done = done && acc[f] >= cfg_.regime.pretrain_stop_accuracy;
                    pretrain_streak = done ? pretrain_streak + 1 : 0;
                    if (pretrain_streak >= cfg_.stop_patience) end_pretraining(rec, step);
                } else {
                    const bool all = std::all_of(acc.begin(), acc.end(),
                                                 [&](double a) { return a >= cfg_.stop_when_all_accurate; });
                    streak = all ? streak + 1 : 0;
                    stop = streak >= cfg_.stop_patience;
                }
            }
            if (pretraining_ && cfg_.regime.pretrain_max_steps > 0 && step >= cfg_.regime.pretrain_max_steps)
                end_pretraining(rec, step);
            if (schedule_.count(step)) capture(rec, step);
            if (stop) break;
        }
        if (rec.evals.back().step != step) evaluate(rec, step);
        if (!rec.find_snapshot(step, penultimate_layer(cfg_.mlp), "test")) capture(rec, step);
        rec.final_step = step;
        rec.final_model = model_;
        if (!keep_) {
            // Keep only the final capture.
            std::vector<RepresentationSnapshot> last;
            for (auto& s : rec.snapshots)
                if (s.step == step) last.push_back(std::move(s));
            rec.snapshots = std::move(last);
        }
        return rec;
    }

private:
    void end_pretraining(RunRecord& rec, std::uint64_t step) {
        if (!pretraining_) return;
        pretraining_ = false;
        rec.pretrain_end_step = step;
        std::fill(mask_.begin(), mask_.end(), 1.0);
    }

    void train_step() {
        const auto n = static_cast<std::size_t>(x_train_.rows());
        const Mode mode = Mode::Train;
        if (cfg_.batch_size == 0 || cfg_.batch_size >= n) {
            auto lg = loss_and_grads(model_, x_train_, y_train_, mask_, mode, &rng_);
            opt_.step(model_.parameter_views(), lg.gradient_views());
            return;
        }
        const std::size_t b = cfg_.batch_size;
        MatrixF xb(static_cast<Eigen::Index>(b), x_train_.cols());
        MatrixF yb(static_cast<Eigen::Index>(b), y_train_.cols());
        for (std::size_t i = 0; i < b; ++i) {
            if (cursor_ >= order_.size()) {
                rng_.shuffle(std::span<Eigen::Index>(order_));
                cursor_ = 0;
            }
            const auto src = order_[cursor_++];
            xb.row(static_cast<Eigen::Index>(i)) = x_train_.row(src);
            yb.row(static_cast<Eigen::Index>(i)) = y_train_.row(src);
        }
        auto lg = loss_and_grads(model_, xb, yb, mask_, mode, &rng_);
        opt_.step(model_.parameter_views(), lg.gradient_views());
    }

    const EvalPoint& evaluate(RunRecord& rec, std::uint64_t step) {
        auto trace = forward(model_, x_test_, Mode::Eval);
        EvalPoint e;
        e.step = step;
        e.phase = pretraining_ ? "pretrain" : "joint";
        e.accuracy = binary_accuracy(trace.logits, y_test_);
        e.loss = sigmoid_cross_entropy(trace.logits, y_test_);
        rec.evals.push_back(std::move(e));
        return rec.evals.back();
    }

    void capture(RunRecord& rec, std::uint64_t step) {
        const std::size_t last = model_.n_hidden() - 1;
        for (const auto* split : {"validation", "test"}) {
            const MatrixF& x = std::string(split) == "test" ? x_test_ : x_val_;
            auto trace = forward(model_, x, Mode::Eval);
            for (std::size_t l = cfg_.capture_all_layers ? 0 : last; l <= last; ++l) {
                RepresentationSnapshot s;
                s.run_id = rec.run_id;
                s.step = step;
                s.layer = layer_name(l);
                s.split = split;
                s.matrix = trace.activations[l];
                s.stimulus_ids = row_ids(x.rows());
                rec.snapshots.push_back(std::move(s));
            }
        }
    }

    const ExperimentConfig& cfg_;
    bool keep_;
    MatrixF x_train_, y_train_, x_val_, x_test_, y_test_;
    MlpF model_;
    Optimizer<float> opt_;
    Rng rng_;
    std::vector<double> mask_;
    bool pretraining_ = false;
    std::set<std::uint64_t> schedule_;
    std::vector<Eigen::Index> order_;
    std::size_t cursor_ = 0;
};

// Training allocates the same large temporaries every step; keeping them on the
// heap instead of fresh mmap regions avoids page-fault churn.
void keep_large_blocks_on_heap() {
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
    });
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
    const ExperimentConfig cfg = config.resolved();
    cfg.validate();
    keep_large_blocks_on_heap();
    const auto started = std::chrono::steady_clock::now();
    BoolDataset generated;
    if (!options.dataset) generated = generate(cfg.dataset);
    const BoolDataset& data = options.dataset ? *options.dataset : generated;
    RunRecord rec = Trainer(cfg, data, options.keep_snapshots || options.out_dir.has_value()).run();
    if (options.out_dir) {
        write_run(rec, *options.out_dir);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::ofstream log(*options.out_dir / "run.log", std::ios::app);
        log << timestamp() << " run " << rec.run_id << " status=" << to_string(rec.status) << " steps=" << rec.final_step
            << " seconds=" << seconds << '\n';
        if (!options.keep_snapshots) {
            std::vector<RepresentationSnapshot> last;
            for (auto& s : rec.snapshots)
                if (s.step == rec.final_step) last.push_back(std::move(s));
            rec.snapshots = std::move(last);
        }
    }
    return rec;
}

std::string metrics_csv(const RunRecord& rec) {
    std::ostringstream out;
    out.precision(9);
    out << "step,feature,split,accuracy,loss\n";
    for (const auto& e : rec.evals)
        for (std::size_t f = 0; f < e.accuracy.size(); ++f)
            out << e.step << ',' << feature_label(rec.config.dataset, f) << ",test," << e.accuracy[f] << ',' << e.loss[f]
                << '\n';
    return out.str();
}

void write_run(const RunRecord& rec, const fs::path& dir) {
    fs::create_directories(dir / "snapshots");
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : rec.snapshots) {
        char name[96];
        std::snprintf(name, sizeof name, "%s_%s_step%08llu.rbl", s.split.c_str(), s.layer.c_str(),
                      static_cast<unsigned long long>(s.step));
        write_snapshot(s, dir / "snapshots" / name);
        snaps.push_back({{"step", s.step}, {"layer", s.layer}, {"split", s.split}, {"file", std::string("snapshots/") + name}});
    }
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& e : rec.evals)
        evals.push_back({{"step", e.step}, {"phase", e.phase}, {"accuracy", e.accuracy}, {"loss", e.loss}});
    nlohmann::json doc = {{"run_id", rec.run_id},
                          {"status", to_string(rec.status)},
                          {"message", rec.message},
                          {"final_step", rec.final_step},
                          {"pretrain_end_step", rec.pretrain_end_step ? nlohmann::json(*rec.pretrain_end_step) : nlohmann::json()},
                          {"config", to_json(rec.config)},
                          {"evals", evals},
                          {"snapshots", snaps},
                          {"model", "model.rbl"}};
    write_model(rec.final_model, dir / "model.rbl");
    write_text_atomic(dir / "metrics.csv", metrics_csv(rec));
    write_text_atomic(dir / "run.json", doc.dump(2) + "\n");
}

RunRecord read_run(const fs::path& dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(std::ifstream(dir / "run.json"));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError((dir / "run.json").string() + ": " + e.what());
    }
    RunRecord rec;
    try {
        rec.run_id = doc.at("run_id").get<std::string>();
        rec.status = doc.at("status").get<std::string>() == "diverged" ? RunStatus::Diverged : RunStatus::Completed;
        rec.message = doc.at("message").get<std::string>();
        rec.final_step = doc.at("final_step").get<std::uint64_t>();
        if (!doc.at("pretrain_end_step").is_null()) rec.pretrain_end_step = doc.at("pretrain_end_step").get<std::uint64_t>();
        rec.config = experiment_config_from_json(doc.at("config"));
        for (const auto& e : doc.at("evals"))
            rec.evals.push_back({e.at("step").get<std::uint64_t>(), e.at("phase").get<std::string>(),
                                 e.at("accuracy").get<std::vector<double>>(), e.at("loss").get<std::vector<double>>()});
        for (const auto& s : doc.at("snapshots")) rec.snapshots.push_back(read_snapshot(dir / s.at("file").get<std::string>()));
        rec.final_model = read_model(dir / doc.at("model").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError((dir / "run.json").string() + ": " + e.what());
    }
    return rec;
}

std::vector<ExperimentConfig> expand_grid(const SweepSpec& spec) {
    if (!spec.base.is_object()) throw ConfigError("sweep: base config must be an object");
    bool seed_axis = false;
    std::size_t cells = 1;
    for (const auto& axis : spec.axes) {
        if (axis.values.empty()) throw ConfigError("sweep axis " + axis.path + " has no values");
        seed_axis = seed_axis || axis.path == "/seed";
        cells *= axis.values.size();
    }
    const std::uint64_t base_seed = spec.base.value("seed", std::uint64_t{0});
    const std::string base_name = spec.base.value("name", std::string("run"));
    std::vector<ExperimentConfig> out;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        nlohmann::json j = spec.base;
        std::size_t rest = cell;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            const auto& axis = spec.axes[a];
            const auto& value = axis.values[rest % axis.values.size()];
            rest /= axis.values.size();
            try {
                j[nlohmann::json::json_pointer(axis.path)] = value;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("sweep axis " + axis.path + ": " + e.what());
            }
        }
        if (!seed_axis) j["seed"] = derive_seed(base_seed, cell);
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_c%04zu", cell);
        j["name"] = base_name + suffix;
        out.push_back(experiment_config_from_json(j, "/cells/" + std::to_string(cell)));
    }
    return out;
}

SweepResult sweep(const std::vector<ExperimentConfig>& cells, const SweepOptions& options) {
    if (cells.empty()) throw ContractViolation("sweep: grid is empty");
    SweepResult result;
    result.records.resize(cells.size());
    result.errors.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto cell_dir = [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu", i);
        return *options.out_dir / name;
    };
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            RunOptions ro;
            ro.keep_snapshots = options.keep_snapshots;
            if (options.out_dir) ro.out_dir = cell_dir(i);
            try {
                result.records[i] = run(cells[i], ro);
            } catch (const std::exception& e) {
                result.errors[i] = e.what();
                if (options.out_dir) write_text_atomic(cell_dir(i) / "error.txt", std::string(e.what()) + "\n");
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, cells.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (options.out_dir) {
        std::ostringstream csv;
        csv << "cell,name,seed,status,final_step,error\n";
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& r = result.records[i];
            std::string err = result.errors[i];
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            csv << i << ',' << cells[i].name << ',' << cells[i].seed << ',' << (r ? to_string(r->status) : "failed") << ','
                << (r ? std::to_string(r->final_step) : "") << ',' << err << '\n';
        }
        write_text_atomic(*options.out_dir / "sweep_summary.csv", csv.str());
    }
    return result;
}

}  // namespace rblab
