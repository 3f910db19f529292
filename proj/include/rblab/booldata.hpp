#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rblab/linalg.hpp"

namespace rblab {

enum class FeatureKind { Linear, And, Or, Xor2, Parity3, SumMod2_4 };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// One target feature of a boolean dataset.
///
/// `input_indices` lists every input unit the feature owns. For LINEAR this is
/// the `redundancy` copies of its single logical bit; for the other kinds it is
/// one index per logical input. AND/OR take their arity from the index count.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::Linear;
    std::vector<std::size_t> input_indices;
    double prevalence = 0.5;
    std::size_t redundancy = 1;
    std::string name;

    /// Number of logical inputs the feature is a function of.
    std::size_t arity() const;
    /// Indices of the logical inputs (the first copy only, for LINEAR).
    std::vector<std::size_t> logical_indices() const;
};

/// Logical input count implied by a kind when building layouts (AND/OR need `and_or_arity`).
std::size_t default_arity(FeatureKind kind, std::size_t and_or_arity = 3);

struct SplitSizes {
    std::size_t train = 4096;
    std::size_t validation = 1024;
    std::size_t test = 1024;
};

struct BoolDatasetConfig {
    std::size_t n_inputs = 64;
    std::vector<FeatureSpec> features;
    SplitSizes sizes;
    std::uint64_t seed = 0;

    /// Throws ContractViolation when indices overlap, run past n_inputs, or
    /// prevalences leave (0, 1).
    void validate() const;
};

/// Builder that lays features out on consecutive input units starting at 0.
class FeatureLayout {
public:
    FeatureLayout& add(FeatureKind kind, double prevalence = 0.5, std::size_t redundancy = 1, std::size_t and_or_arity = 3,
                       std::string name = {});
    std::vector<FeatureSpec> build() const { return features_; }
    std::size_t used_inputs() const { return next_; }

private:
    std::vector<FeatureSpec> features_;
    std::size_t next_ = 0;
};

/// Inputs and per-feature labels for one split; entries are 0/1.
struct DatasetSplit {
    Matrix inputs;  // examples x n_inputs
    Matrix labels;  // examples x n_features

    std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

struct BoolDataset {
    DatasetSplit train;
    DatasetSplit validation;
    DatasetSplit test;
};

/// Evaluates a feature on one input vector.
int feature_value(const FeatureSpec& spec, std::span<const std::uint8_t> input);

/// Row i of a 0/1 matrix as bits.
std::vector<std::uint8_t> row_bits(const Matrix& inputs, Eigen::Index row);

BoolDataset generate(const BoolDatasetConfig& config);

/// Draws one split of `n` rows from the generative process (labels first, inputs conditioned).
DatasetSplit generate_split(const BoolDatasetConfig& config, std::size_t n, std::uint64_t seed);

/// Maximum arity accepted by enumerate_patterns.
inline constexpr std::size_t kMaxPatternArity = 8;

/// One-hot encoding of the relevant-bit configuration, most significant bit first.
Matrix enumerate_patterns(const FeatureSpec& spec, const Matrix& inputs);

enum class DownstreamMode { Joint, EasyOnly, HardOnly, Conflict };
std::string to_string(DownstreamMode mode);

/// Dataset whose target g is predicted by the easy and hard features.
///
/// `labels` holds the base features in config order followed by g in the last
/// column.
DatasetSplit downstream_dataset(const BoolDatasetConfig& base, double predictivity, DownstreamMode mode, std::size_t size,
                                std::uint64_t seed);

/// Uniform random inputs with labels for `features` (no conditioning); used as a
/// shared stimulus set across tasks.
DatasetSplit uniform_stimuli(std::size_t n_inputs, const std::vector<FeatureSpec>& features, std::size_t n,
                             std::uint64_t seed);

/// Recomputes labels from inputs.
Matrix label_matrix(const std::vector<FeatureSpec>& features, const Matrix& inputs);

void write_jsonl(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_jsonl(const std::filesystem::path& path);

}  // namespace rblab
