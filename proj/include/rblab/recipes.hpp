#pragma once

// Desk-scale experiment definitions, one per recipe. The CLI's
// `reproduce` subcommand and the acceptance suite share these builders.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "rblab/booldata.hpp"
#include "rblab/seqgen.hpp"
#include "rblab/trainer.hpp"

namespace rblab {

enum class RecipeId {
    Fig2EasyHard,
    Fig3TrainingOrder,
    Fig4AllPatterns,
    Fig5Prevalence,
    FigB6FourFeatures,
    FigB7Hypers,
    Fig8Intervention,
    Fig9Pca,
    Fig7Rsa,
    Fig11Downstream,
    DyckGen,
    LettersGen,
};

std::string to_string(RecipeId id);
RecipeId recipe_from_string(const std::string& name);
const std::vector<RecipeId>& all_recipes();

/// Easy (4-way redundant LINEAR) + hard (SUM_MOD2_4), Adam lr 1e-3, full batch.
ExperimentConfig fig2_config(std::uint64_t seed);

enum class TrainingOrder { Simultaneous, PretrainEasy, PretrainHard };
std::string to_string(TrainingOrder order);
ExperimentConfig training_order_config(std::uint64_t seed, TrainingOrder order);

/// Two LINEAR and two SUM_MOD2_4 features; the second of each kind has prevalence 0.1.
ExperimentConfig prevalence_config(std::uint64_t seed);

/// Four features drawn (with replacement) from linear, and, or, xor2, sum_mod2_4.
ExperimentConfig four_feature_config(std::uint64_t seed);

/// Optimizer x dropout grid on the easy/hard task.
SweepSpec hyper_sweep(std::uint64_t seed);

struct RsaTask {
    std::string name;
    std::vector<FeatureSpec> features;
};

/// Feature-pair tasks over two fixed input slots (0-3 and 4-7): linear+linear,
/// linear+xor2, linear+sum_mod2, sum_mod2+sum_mod2. Linear features read the
/// first unit of their slot, so uniform stimuli are in distribution for all tasks.
std::vector<RsaTask> rsa_tasks();
ExperimentConfig rsa_config(const RsaTask& task, std::uint64_t seed);

struct DownstreamSetup {
    std::vector<double> predictivities{0.55, 0.65, 0.75, 0.85, 0.95};
    std::size_t train_size = 4096;
    std::size_t conflict_size = 1024;
};

struct ReproduceOptions {
    std::uint64_t seed = 0;
    std::size_t n_seeds = 1;
    std::size_t workers = 1;
    std::filesystem::path out;
};

/// The JSON document shipped under configs/recipes/ for `id`.
nlohmann::json recipe_document(RecipeId id, std::uint64_t seed = 0);

/// Runs generation, training and analysis for `id`; writes summary.csv (plus
/// per-run directories) under options.out.
void reproduce(RecipeId id, const ReproduceOptions& options);

}  // namespace rblab
