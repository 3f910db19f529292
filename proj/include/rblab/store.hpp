#pragma once

// Self-describing binary files: one JSON header line followed by a raw
// little-endian IEEE-754 float32 payload, row-major. See docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "rblab/booldata.hpp"
#include "rblab/linalg.hpp"
#include "rblab/nn.hpp"
#include "rblab/optim.hpp"

namespace rblab {

inline constexpr const char* kFileMagic = "RBLAB1";

/// A (stimuli x units) activation matrix captured for one layer at one step.
struct RepresentationSnapshot {
    std::string run_id;
    std::uint64_t step = 0;
    std::string layer;
    std::string split;
    MatrixF matrix;
    std::vector<std::uint64_t> stimulus_ids;

    /// Row count matches ids and ids are strictly increasing.
    void validate() const;
    Matrix as_double() const { return matrix.cast<double>(); }
    bool operator==(const RepresentationSnapshot& other) const;
};

struct TensorFile {
    std::string kind;
    std::size_t rows = 0;
    std::size_t cols = 0;
    nlohmann::json meta;
    std::vector<float> data;
};

void write_tensor_file(const std::filesystem::path& path, const std::string& kind, std::size_t rows, std::size_t cols,
                       std::span<const float> data, const nlohmann::json& meta);
TensorFile read_tensor_file(const std::filesystem::path& path);

void write_snapshot(const RepresentationSnapshot& snapshot, const std::filesystem::path& path);
RepresentationSnapshot read_snapshot(const std::filesystem::path& path);
void write_snapshot_csv(const RepresentationSnapshot& snapshot, const std::filesystem::path& path);

void write_model(const MlpF& model, const std::filesystem::path& path);
MlpF read_model(const std::filesystem::path& path);

void write_optimizer(const Optimizer<float>& optimizer, const std::filesystem::path& path);
Optimizer<float> read_optimizer(const std::filesystem::path& path);

/// Writes `<stem>.inputs.rbl` and `<stem>.labels.rbl` next to each other.
void write_dataset_binary(const DatasetSplit& split, const std::filesystem::path& stem);
DatasetSplit read_dataset_binary(const std::filesystem::path& stem);

/// Writes `text` to `path` via a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rblab
