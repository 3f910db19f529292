#include "rblab/booldata.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>

#include "rblab/errors.hpp"
#include "rblab/rng.hpp"

namespace rblab {

namespace {

constexpr int kRejectionBudget = 10000;

int evaluate_logical(FeatureKind kind, std::span<const std::uint8_t> bits) {
    switch (kind) {
        case FeatureKind::Linear:
            return bits[0];
        case FeatureKind::And:
            return std::all_of(bits.begin(), bits.end(), [](auto b) { return b != 0; }) ? 1 : 0;
        case FeatureKind::Or:
            return std::any_of(bits.begin(), bits.end(), [](auto b) { return b != 0; }) ? 1 : 0;
        case FeatureKind::Xor2:
        case FeatureKind::Parity3:
        case FeatureKind::SumMod2_4: {
            int sum = 0;
            for (auto b : bits) sum += b;
            return sum % 2;
        }
    }
    return 0;
}

std::string feature_label(const FeatureSpec& spec, std::size_t index) {
    if (!spec.name.empty()) return spec.name;
    return "feature " + std::to_string(index) + " (" + to_string(spec.kind) + ")";
}

// Writes the relevant inputs of `spec` into `row` so the feature takes `label`.
void realize_feature(const FeatureSpec& spec, std::size_t feature_index, int label, Rng& rng,
                     std::span<std::uint8_t> row) {
    if (spec.kind == FeatureKind::Linear) {
        for (auto idx : spec.input_indices) row[idx] = static_cast<std::uint8_t>(label);
        return;
    }
    const auto& idx = spec.input_indices;
    std::vector<std::uint8_t> bits(idx.size());
    for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
        for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
        if (evaluate_logical(spec.kind, bits) == label) {
            for (std::size_t j = 0; j < idx.size(); ++j) row[idx[j]] = bits[j];
            return;
        }
    }
    throw GenerationError("rejection budget exceeded while realizing label " + std::to_string(label) + " for " +
                          feature_label(spec, feature_index));
}

}  // namespace

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Linear: return "linear";
        case FeatureKind::And: return "and";
        case FeatureKind::Or: return "or";
        case FeatureKind::Xor2: return "xor2";
        case FeatureKind::Parity3: return "parity3";
        case FeatureKind::SumMod2_4: return "sum_mod2_4";
    }
    return "?";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    static const std::pair<const char*, FeatureKind> table[] = {
        {"linear", FeatureKind::Linear}, {"and", FeatureKind::And},         {"or", FeatureKind::Or},
        {"xor2", FeatureKind::Xor2},     {"parity3", FeatureKind::Parity3}, {"sum_mod2_4", FeatureKind::SumMod2_4},
    };
    for (const auto& [key, kind] : table)
        if (name == key) return kind;
    throw ContractViolation("unknown feature kind '" + name + "'");
}

std::size_t default_arity(FeatureKind kind, std::size_t and_or_arity) {
    switch (kind) {
        case FeatureKind::Linear: return 1;
        case FeatureKind::And:
        case FeatureKind::Or: return and_or_arity;
        case FeatureKind::Xor2: return 2;
        case FeatureKind::Parity3: return 3;
        case FeatureKind::SumMod2_4: return 4;
    }
    return 0;
}

std::size_t FeatureSpec::arity() const {
    return kind == FeatureKind::Linear ? 1 : input_indices.size();
}

std::vector<std::size_t> FeatureSpec::logical_indices() const {
    if (kind == FeatureKind::Linear) {
        if (input_indices.empty()) return {};
        return {input_indices.front()};
    }
    return input_indices;
}

void BoolDatasetConfig::validate() const {
    std::set<std::size_t> seen;
    for (std::size_t f = 0; f < features.size(); ++f) {
        const auto& spec = features[f];
        const std::string who = feature_label(spec, f);
        if (spec.input_indices.empty()) throw ContractViolation(who + ": no input indices");
        if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0))
            throw ContractViolation(who + ": prevalence must lie in (0, 1)");
        switch (spec.kind) {
            case FeatureKind::Linear:
                if (spec.redundancy < 1 || spec.input_indices.size() != spec.redundancy)
                    throw ContractViolation(who + ": LINEAR needs exactly `redundancy` input indices");
                break;
            case FeatureKind::Xor2:
                if (spec.input_indices.size() != 2) throw ContractViolation(who + ": XOR2 consumes 2 inputs");
                break;
            case FeatureKind::Parity3:
                if (spec.input_indices.size() != 3) throw ContractViolation(who + ": PARITY3 consumes 3 inputs");
                break;
            case FeatureKind::SumMod2_4:
                if (spec.input_indices.size() != 4) throw ContractViolation(who + ": SUM_MOD2_4 consumes 4 inputs");
                break;
            case FeatureKind::And:
            case FeatureKind::Or:
                break;
        }
        for (auto idx : spec.input_indices) {
            if (idx >= n_inputs) throw ContractViolation(who + ": input index " + std::to_string(idx) + " out of range");
            if (!seen.insert(idx).second)
                throw ContractViolation(who + ": input index " + std::to_string(idx) + " shared with another feature");
        }
    }
}

FeatureLayout& FeatureLayout::add(FeatureKind kind, double prevalence, std::size_t redundancy, std::size_t and_or_arity,
                                  std::string name) {
    FeatureSpec spec;
    spec.kind = kind;
    spec.prevalence = prevalence;
    spec.name = std::move(name);
    const std::size_t width = kind == FeatureKind::Linear ? redundancy : default_arity(kind, and_or_arity);
    spec.redundancy = kind == FeatureKind::Linear ? redundancy : 1;
    for (std::size_t i = 0; i < width; ++i) spec.input_indices.push_back(next_++);
    features_.push_back(std::move(spec));
    return *this;
}

int feature_value(const FeatureSpec& spec, std::span<const std::uint8_t> input) {
    const auto logical = spec.logical_indices();
    if (logical.empty()) throw ContractViolation("feature_value: feature has no inputs");
    std::vector<std::uint8_t> bits(logical.size());
    for (std::size_t j = 0; j < logical.size(); ++j) {
        if (logical[j] >= input.size())
            throw ContractViolation("feature_value: index " + std::to_string(logical[j]) + " beyond input of length " +
                                    std::to_string(input.size()));
        bits[j] = input[logical[j]] ? 1 : 0;
    }
    return evaluate_logical(spec.kind, bits);
}

std::vector<std::uint8_t> row_bits(const Matrix& inputs, Eigen::Index row) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) bits[static_cast<std::size_t>(c)] = inputs(row, c) > 0.5 ? 1 : 0;
    return bits;
}

Matrix label_matrix(const std::vector<FeatureSpec>& features, const Matrix& inputs) {
    Matrix labels(inputs.rows(), static_cast<Eigen::Index>(features.size()));
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        const auto bits = row_bits(inputs, i);
        for (std::size_t f = 0; f < features.size(); ++f)
            labels(i, static_cast<Eigen::Index>(f)) = feature_value(features[f], bits);
    }
    return labels;
}

DatasetSplit generate_split(const BoolDatasetConfig& config, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto n_features = config.features.size();
    DatasetSplit split;
    split.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.n_inputs));
    split.labels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
    std::vector<std::uint8_t> row(config.n_inputs);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& b : row) b = static_cast<std::uint8_t>(rng.bit());
        for (std::size_t f = 0; f < n_features; ++f) {
            const auto& spec = config.features[f];
            const int label = rng.bernoulli(spec.prevalence) ? 1 : 0;
            realize_feature(spec, f, label, rng, row);
            split.labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = label;
        }
        for (std::size_t c = 0; c < config.n_inputs; ++c)
            split.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    return split;
}

BoolDataset generate(const BoolDatasetConfig& config) {
    config.validate();
    BoolDataset data;
    data.train = generate_split(config, config.sizes.train, derive_seed(config.seed, 1));
    data.validation = generate_split(config, config.sizes.validation, derive_seed(config.seed, 2));
    data.test = generate_split(config, config.sizes.test, derive_seed(config.seed, 3));
    return data;
}

Matrix enumerate_patterns(const FeatureSpec& spec, const Matrix& inputs) {
    const auto logical = spec.logical_indices();
    if (logical.size() > kMaxPatternArity)
        throw ContractViolation("enumerate_patterns: arity " + std::to_string(logical.size()) +
                                " would need 2^arity columns; at most " + std::to_string(kMaxPatternArity) +
                                " relevant inputs are supported");
    for (auto idx : logical)
        if (static_cast<Eigen::Index>(idx) >= inputs.cols())
            throw ContractViolation("enumerate_patterns: index " + std::to_string(idx) + " out of range");
    const Eigen::Index width = Eigen::Index{1} << logical.size();
    Matrix onehot = Matrix::Zero(inputs.rows(), width);
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        Eigen::Index code = 0;
        for (auto idx : logical) code = (code << 1) | (inputs(i, static_cast<Eigen::Index>(idx)) > 0.5 ? 1 : 0);
        onehot(i, code) = 1.0;
    }
    return onehot;
}

std::string to_string(DownstreamMode mode) {
    switch (mode) {
        case DownstreamMode::Joint: return "joint";
        case DownstreamMode::EasyOnly: return "easy_only";
        case DownstreamMode::HardOnly: return "hard_only";
        case DownstreamMode::Conflict: return "conflict";
    }
    return "?";
}

DatasetSplit downstream_dataset(const BoolDatasetConfig& base, double predictivity, DownstreamMode mode,
                                std::size_t size, std::uint64_t seed) {
    if (!(predictivity >= 0.5 && predictivity <= 1.0))
        throw ContractViolation("downstream_dataset: predictivity must lie in [0.5, 1]");
    base.validate();
    std::ptrdiff_t easy = -1, hard = -1;
    for (std::size_t f = 0; f < base.features.size(); ++f) {
        if (base.features[f].kind == FeatureKind::Linear) {
            if (easy >= 0) throw ContractViolation("downstream_dataset: base needs exactly one LINEAR feature");
            easy = static_cast<std::ptrdiff_t>(f);
        } else if (base.features[f].kind == FeatureKind::SumMod2_4) {
            if (hard >= 0) throw ContractViolation("downstream_dataset: base needs exactly one SUM_MOD2_4 feature");
            hard = static_cast<std::ptrdiff_t>(f);
        }
    }
    if (easy < 0 || hard < 0 || base.features.size() != 2)
        throw ContractViolation("downstream_dataset: base must hold one LINEAR and one SUM_MOD2_4 feature");

    Rng rng(seed);
    const auto n_features = static_cast<Eigen::Index>(base.features.size());
    DatasetSplit split;
    split.inputs.resize(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(base.n_inputs));
    split.labels.resize(static_cast<Eigen::Index>(size), n_features + 1);
    std::vector<std::uint8_t> row(base.n_inputs);
    auto predicted = [&](int g) { return rng.bernoulli(predictivity) ? g : 1 - g; };
    for (std::size_t i = 0; i < size; ++i) {
        const int g = rng.bit();
        int f_easy = 0, f_hard = 0;
        switch (mode) {
            case DownstreamMode::Joint:
                f_easy = predicted(g);
                f_hard = predicted(g);
                break;
            case DownstreamMode::EasyOnly:
                f_easy = g;
                f_hard = rng.bit();
                break;
            case DownstreamMode::HardOnly:
                f_easy = rng.bit();
                f_hard = g;
                break;
            case DownstreamMode::Conflict:
                f_easy = g;
                f_hard = 1 - g;
                break;
        }
        for (auto& b : row) b = static_cast<std::uint8_t>(rng.bit());
        realize_feature(base.features[static_cast<std::size_t>(easy)], static_cast<std::size_t>(easy), f_easy, rng, row);
        realize_feature(base.features[static_cast<std::size_t>(hard)], static_cast<std::size_t>(hard), f_hard, rng, row);
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t c = 0; c < base.n_inputs; ++c) split.inputs(r, static_cast<Eigen::Index>(c)) = row[c];
        split.labels(r, easy) = f_easy;
        split.labels(r, hard) = f_hard;
        split.labels(r, n_features) = g;
    }
    return split;
}

DatasetSplit uniform_stimuli(std::size_t n_inputs, const std::vector<FeatureSpec>& features, std::size_t n,
                             std::uint64_t seed) {
    Rng rng(seed);
    DatasetSplit split;
    split.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_inputs));
    for (Eigen::Index i = 0; i < split.inputs.rows(); ++i)
        for (Eigen::Index c = 0; c < split.inputs.cols(); ++c) split.inputs(i, c) = rng.bit();
    split.labels = label_matrix(features, split.inputs);
    return split;
}

void write_jsonl(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (Eigen::Index i = 0; i < split.inputs.rows(); ++i) {
        std::string bits(static_cast<std::size_t>(split.inputs.cols()), '0');
        for (Eigen::Index c = 0; c < split.inputs.cols(); ++c)
            if (split.inputs(i, c) > 0.5) bits[static_cast<std::size_t>(c)] = '1';
        nlohmann::json rec;
        rec["input"] = bits;
        std::vector<int> labels;
        for (Eigen::Index f = 0; f < split.labels.cols(); ++f) labels.push_back(static_cast<int>(split.labels(i, f)));
        rec["labels"] = labels;
        out << rec.dump() << '\n';
    }
}

DatasetSplit read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> inputs;
    std::vector<std::vector<int>> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            inputs.push_back(rec.at("input").get<std::string>());
            labels.push_back(rec.at("labels").get<std::vector<int>>());
        } catch (const nlohmann::json::exception& e) {
            throw CorruptFileError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (inputs.back().size() != inputs.front().size() || labels.back().size() != labels.front().size())
            throw CorruptFileError(path.string() + ":" + std::to_string(lineno) + ": inconsistent record width");
    }
    DatasetSplit split;
    const auto n = static_cast<Eigen::Index>(inputs.size());
    split.inputs.resize(n, n ? static_cast<Eigen::Index>(inputs[0].size()) : 0);
    split.labels.resize(n, n ? static_cast<Eigen::Index>(labels[0].size()) : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = inputs[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < split.inputs.cols(); ++c) {
            const char ch = s[static_cast<std::size_t>(c)];
            if (ch != '0' && ch != '1') throw CorruptFileError(path.string() + ": input must be a 0/1 string");
            split.inputs(i, c) = ch == '1' ? 1.0 : 0.0;
        }
        for (Eigen::Index f = 0; f < split.labels.cols(); ++f)
            split.labels(i, f) = labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
    }
    return split;
}

}  // namespace rblab
