#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rblab/booldata.hpp"
#include "rblab/nn.hpp"
#include "rblab/optim.hpp"
#include "rblab/store.hpp"

namespace rblab {

enum class RegimeKind { Simultaneous, Pretrain };
std::string to_string(RegimeKind kind);
RegimeKind regime_kind_from_string(const std::string& name);

struct TrainingRegime {
    RegimeKind kind = RegimeKind::Simultaneous;
    std::vector<std::size_t> pretrain_features;
    double pretrain_stop_accuracy = 0.999;
    std::uint64_t pretrain_max_steps = 0;  // 0: bounded only by max_steps

    void validate(std::size_t n_features) const;
    bool operator==(const TrainingRegime&) const = default;
};

/// Log-spaced capture steps: 0, then round(base^k) for k = 1, 2, ... (deduplicated),
/// plus whatever step training ends on. A nonempty `explicit_steps` replaces the
/// log spacing.
struct SnapshotSchedule {
    double log_base = 1.3;
    std::vector<std::uint64_t> explicit_steps;

    std::vector<std::uint64_t> steps(std::uint64_t max_steps) const;
    void validate() const;
    bool operator==(const SnapshotSchedule&) const = default;
};

struct ExperimentConfig {
    std::string name = "run";
    BoolDatasetConfig dataset;
    MlpConfig mlp;
    OptimizerSpec optimizer = OptimizerSpec::defaults(OptimizerKind::Adam, 1e-3);
    TrainingRegime regime;
    std::uint64_t max_steps = 20000;
    std::size_t batch_size = 0;  // 0: full batch
    SnapshotSchedule snapshots;
    std::uint64_t eval_every = 10;
    double stop_when_all_accurate = 0.999;
    int stop_patience = 3;  // consecutive evals above threshold
    bool capture_all_layers = false;
    std::uint64_t seed = 0;

    void validate() const;
    /// Copy with dataset.seed and mlp.seed derived from `seed`; run() uses this.
    ExperimentConfig resolved() const;
};

/// Default two-feature task: easy = LINEAR with 4 redundant copies, hard =
/// SUM_MOD2 over 4 inputs, balanced, on 64 inputs.
ExperimentConfig easy_hard_config(std::uint64_t seed);

enum class RunStatus { Completed, Diverged };
std::string to_string(RunStatus status);

struct EvalPoint {
    std::uint64_t step = 0;
    std::string phase;              // "pretrain" or "joint"
    std::vector<double> accuracy;   // test split, per feature
    std::vector<double> loss;
};

struct RunRecord {
    std::string run_id;
    ExperimentConfig config;  // resolved
    RunStatus status = RunStatus::Completed;
    std::string message;
    std::vector<EvalPoint> evals;
    std::vector<RepresentationSnapshot> snapshots;
    std::optional<std::uint64_t> pretrain_end_step;
    std::uint64_t final_step = 0;
    MlpF final_model;

    /// First evaluated step at which `feature` reached `threshold` test accuracy.
    std::optional<std::uint64_t> first_step_reaching(std::size_t feature, double threshold) const;
    const RepresentationSnapshot* find_snapshot(std::uint64_t step, const std::string& layer,
                                                const std::string& split) const;
    /// Penultimate snapshot for `split` at the last captured step.
    const RepresentationSnapshot& final_snapshot(const std::string& split) const;
    std::vector<std::uint64_t> snapshot_steps() const;
};

std::string layer_name(std::size_t hidden_layer);
std::string penultimate_layer(const MlpConfig& config);

/// EVAL-mode activations of hidden layer `layer` on `inputs`, ids 0..n-1.
RepresentationSnapshot capture_snapshot(const MlpF& model, const Matrix& inputs, std::size_t layer, std::string run_id,
                                        std::string split, std::uint64_t step = 0);

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    bool keep_snapshots = true;
    /// Dataset to train on; generated from the config when absent.
    const BoolDataset* dataset = nullptr;
};

RunRecord run(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes run.json, metrics.csv, model.rbl and the snapshots under `dir`.
void write_run(const RunRecord& record, const std::filesystem::path& dir);

/// Loads a directory written by write_run (snapshots included).
RunRecord read_run(const std::filesystem::path& dir);

/// CSV with columns step,feature,split,accuracy,loss.
std::string metrics_csv(const RunRecord& record);

struct SweepAxis {
    std::string path;  // JSON pointer into the experiment config, e.g. "/mlp/dropout_rate"
    std::vector<nlohmann::json> values;
};

struct SweepSpec {
    nlohmann::json base;
    std::vector<SweepAxis> axes;
};

/// Cartesian product of the axes applied to `base`, first axis slowest. Each
/// cell's seed is derive_seed(base seed, cell index) unless "/seed" is an axis.
std::vector<ExperimentConfig> expand_grid(const SweepSpec& spec);

struct SweepOptions {
    std::size_t workers = 1;
    std::optional<std::filesystem::path> out_dir;
    bool keep_snapshots = true;
};

struct SweepResult {
    std::vector<std::optional<RunRecord>> records;  // empty where the cell failed
    std::vector<std::string> errors;                // per cell, empty when it succeeded
};

SweepResult sweep(const std::vector<ExperimentConfig>& cells, const SweepOptions& options = {});

}  // namespace rblab
