#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rblab/booldata.hpp"
#include "rblab/rng.hpp"

namespace rblab {

// ---------------------------------------------------------------------------
// Letter strings
// ---------------------------------------------------------------------------

enum class LetterFeatureKind { ExactMatch, AllButOne, SumMatchMod2 };

struct LetterFeature {
    LetterFeatureKind kind = LetterFeatureKind::ExactMatch;
    std::string target;  // letters the chunk prefix is compared against; length = k

    std::string name() const;
};

struct LetterDatasetConfig {
    std::string vocabulary = "ABCDEFGHI";
    std::size_t chunk_length = 5;
    std::vector<LetterFeature> features;
    SplitSizes sizes{4096, 1024, 1024};
    std::uint64_t seed = 0;
    int rejection_budget = 1000000;  // tries per chunk

    std::size_t sequence_length() const { return features.size() * chunk_length; }
    void validate() const;
};

/// Eight features: exact match over 1-4 letters, all-but-one over 2-4 letters,
/// and sum-of-matches mod 2 over 4 letters, with random targets and a random
/// feature order drawn from `seed`.
LetterDatasetConfig default_letter_config(std::uint64_t seed);

/// Label of `feature` on a chunk (only the first target.size() letters matter).
int letter_feature_value(const LetterFeature& feature, std::string_view chunk);

struct LetterSplit {
    std::vector<std::string> sequences;
    Matrix labels;  // examples x features
};

struct LetterDataset {
    LetterSplit train;
    LetterSplit validation;
    LetterSplit test;
};

LetterDataset generate_letter_dataset(const LetterDatasetConfig& config);

void write_letters_jsonl(const LetterSplit& split, const LetterDatasetConfig& config,
                         const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Bounded Dyck strings
// ---------------------------------------------------------------------------

struct DyckConfig {
    int n_bracket_types = 20;
    int max_depth = 10;
    int max_length = 64;
    double same_type_continuation_prob = 0.70;
    double root_termination_prob = 0.50;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DyckToken {
    bool open = true;
    int cls = 0;

    bool operator==(const DyckToken&) const = default;
};

struct DyckFeatures {
    int first_token_class = 0;
    int first_max_depth_class = 0;
    int max_depth = 0;
    int n_root_nodes = 0;
    int max_branching_factor = 0;

    bool operator==(const DyckFeatures&) const = default;
};

struct DyckSentence {
    std::vector<DyckToken> tokens;
    DyckFeatures features;
};

/// Token-at-a-time sampler. Consumes `rng`; successive calls give a stream.
class DyckSampler {
public:
    explicit DyckSampler(DyckConfig config);
    DyckSentence next();

private:
    DyckConfig config_;
    Rng rng_;
};

DyckSentence sample_dyck(const DyckConfig& config);

struct DyckParse {
    bool ok = false;
    DyckFeatures features;    // valid when ok
    std::size_t position = 0;  // first offending token otherwise
    const char* error = "";
};

/// Single stack pass; never throws. Errors at the first offending token.
DyckParse parse_dyck(const std::vector<DyckToken>& tokens);

/// parse_dyck that throws ParseError instead of reporting.
DyckFeatures dyck_features(const std::vector<DyckToken>& tokens);

/// Balanced, nonempty, classes in range, depth and length within `config` bounds.
bool validate_dyck(const std::vector<DyckToken>& tokens, const DyckConfig& config);

/// Text form: "(3" opens class 3, ")3" closes it.
std::string token_text(const DyckToken& token);
DyckToken parse_token(const std::string& text);

void write_dyck_jsonl(const std::vector<DyckSentence>& sentences, const std::filesystem::path& path);
std::vector<std::vector<DyckToken>> read_dyck_jsonl(const std::filesystem::path& path);

}  // namespace rblab
