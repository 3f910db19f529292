#include "rblab/seqgen.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <string_view>

#include "rblab/errors.hpp"

namespace rblab {

// ---------------------------------------------------------------------------
// Letter strings
// ---------------------------------------------------------------------------

std::string LetterFeature::name() const {
    const auto k = std::to_string(target.size());
    switch (kind) {
        case LetterFeatureKind::ExactMatch: return "exact_match_" + k + "_" + target;
        case LetterFeatureKind::AllButOne: return "all_but_one_" + k + "_" + target;
        case LetterFeatureKind::SumMatchMod2: return "sum_match_mod2_" + k + "_" + target;
    }
    return target;
}

void LetterDatasetConfig::validate() const {
    if (vocabulary.empty()) throw ContractViolation("letter dataset: empty vocabulary");
    if (features.empty()) throw ContractViolation("letter dataset: no features");
    for (const auto& f : features) {
        const auto k = f.target.size();
        if (k == 0 || k >= chunk_length)
            throw ContractViolation("letter feature " + f.name() + ": target must be shorter than the chunk");
        if (f.kind == LetterFeatureKind::AllButOne && k < 2)
            throw ContractViolation("letter feature " + f.name() + ": all-but-one needs at least 2 letters");
        for (char c : f.target)
            if (vocabulary.find(c) == std::string::npos)
                throw ContractViolation("letter feature " + f.name() + ": target letter outside vocabulary");
    }
    if (rejection_budget < 1) throw ContractViolation("letter dataset: rejection budget must be positive");
}

LetterDatasetConfig default_letter_config(std::uint64_t seed) {
    LetterDatasetConfig config;
    config.seed = seed;
    Rng rng(derive_seed(seed, 100));
    auto random_target = [&](std::size_t k) {
        std::string t;
        for (std::size_t i = 0; i < k; ++i) t.push_back(config.vocabulary[rng.below(config.vocabulary.size())]);
        return t;
    };
    for (std::size_t k = 1; k <= 4; ++k) config.features.push_back({LetterFeatureKind::ExactMatch, random_target(k)});
    for (std::size_t k = 2; k <= 4; ++k) config.features.push_back({LetterFeatureKind::AllButOne, random_target(k)});
    config.features.push_back({LetterFeatureKind::SumMatchMod2, random_target(4)});
    rng.shuffle(std::span<LetterFeature>(config.features));
    return config;
}

int letter_feature_value(const LetterFeature& feature, std::string_view chunk) {
    const auto k = feature.target.size();
    if (chunk.size() < k) throw ContractViolation("letter_feature_value: chunk shorter than target");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < k; ++i) matches += chunk[i] == feature.target[i] ? 1 : 0;
    switch (feature.kind) {
        case LetterFeatureKind::ExactMatch: return matches == k ? 1 : 0;
        case LetterFeatureKind::AllButOne: return matches + 1 == k ? 1 : 0;
        case LetterFeatureKind::SumMatchMod2: return static_cast<int>(matches % 2);
    }
    return 0;
}

namespace {

LetterSplit generate_letter_split(const LetterDatasetConfig& config, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto& vocab = config.vocabulary;
    const auto L = config.chunk_length;
    LetterSplit split;
    split.labels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.features.size()));
    split.sequences.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string seq(config.sequence_length(), ' ');
        for (auto& c : seq) c = vocab[rng.below(vocab.size())];
        for (std::size_t f = 0; f < config.features.size(); ++f) {
            const auto& feature = config.features[f];
            const int label = rng.bit();
            const std::size_t begin = f * L;
            int attempt = 0;
            while (letter_feature_value(feature, std::string_view(seq).substr(begin, L)) != label) {
                if (++attempt > config.rejection_budget)
                    throw GenerationError("rejection budget exceeded for letter feature " + feature.name());
                for (std::size_t j = 0; j < feature.target.size(); ++j) seq[begin + j] = vocab[rng.below(vocab.size())];
            }
            split.labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = label;
        }
        split.sequences.push_back(std::move(seq));
    }
    return split;
}

}  // namespace

LetterDataset generate_letter_dataset(const LetterDatasetConfig& config) {
    config.validate();
    LetterDataset data;
    data.train = generate_letter_split(config, config.sizes.train, derive_seed(config.seed, 1));
    data.validation = generate_letter_split(config, config.sizes.validation, derive_seed(config.seed, 2));
    data.test = generate_letter_split(config, config.sizes.test, derive_seed(config.seed, 3));
    return data;
}

void write_letters_jsonl(const LetterSplit& split, const LetterDatasetConfig& config,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < split.sequences.size(); ++i) {
        nlohmann::json rec;
        std::vector<std::string> tokens;
        for (char c : split.sequences[i]) tokens.emplace_back(1, c);
        rec["tokens"] = tokens;
        nlohmann::json features = nlohmann::json::object();
        for (std::size_t f = 0; f < config.features.size(); ++f)
            features[config.features[f].name()] =
                static_cast<int>(split.labels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)));
        rec["features"] = features;
        out << rec.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Bounded Dyck strings
// ---------------------------------------------------------------------------

void DyckConfig::validate() const {
    if (n_bracket_types < 1) throw ContractViolation("dyck: need at least one bracket type");
    if (max_depth < 1) throw ContractViolation("dyck: max_depth must be at least 1");
    if (max_length < 2) throw ContractViolation("dyck: max_length must be at least 2");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(same_type_continuation_prob) || !prob(root_termination_prob))
        throw ContractViolation("dyck: probabilities must lie in [0, 1]");
}

DyckSampler::DyckSampler(DyckConfig config) : config_(config), rng_(config.seed) { config_.validate(); }

DyckSentence DyckSampler::next() {
    std::vector<DyckToken> tokens;
    std::vector<int> stack;
    const auto max_len = static_cast<std::size_t>(config_.max_length);
    for (;;) {
        const auto depth = static_cast<int>(stack.size());
        const auto remaining = static_cast<int>(max_len - tokens.size());
        if (depth == 0 && !tokens.empty()) {
            if (remaining < 2 || rng_.bernoulli(config_.root_termination_prob)) break;
        }
        bool open;
        if (depth == 0) {
            open = true;
        } else if (depth >= config_.max_depth || remaining < depth + 2) {
            // No room for another open bracket and its matching close.
            open = false;
        } else {
            const bool prev_open = tokens.back().open;
            open = rng_.bernoulli(config_.same_type_continuation_prob) ? prev_open : !prev_open;
        }
        if (open) {
            const int cls = static_cast<int>(rng_.below(static_cast<std::uint64_t>(config_.n_bracket_types)));
            stack.push_back(cls);
            tokens.push_back({true, cls});
        } else {
            tokens.push_back({false, stack.back()});
            stack.pop_back();
        }
    }
    DyckSentence sentence;
    sentence.features = dyck_features(tokens);
    sentence.tokens = std::move(tokens);
    return sentence;
}

DyckSentence sample_dyck(const DyckConfig& config) { return DyckSampler(config).next(); }

DyckParse parse_dyck(const std::vector<DyckToken>& tokens) {
    DyckParse r;
    if (tokens.empty()) {
        r.error = "empty bracket string";
        return r;
    }
    DyckFeatures& out = r.features;
    out.first_token_class = tokens.front().cls;
    // Child counts of the open nodes on the stack; slot 0 is the virtual root.
    std::vector<int> children{0};
    std::vector<int> classes;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.open) {
            ++children.back();
            out.max_branching_factor = std::max(out.max_branching_factor, children.back());
            classes.push_back(t.cls);
            children.push_back(0);
            const int depth = static_cast<int>(classes.size());
            if (depth > out.max_depth) {
                out.max_depth = depth;
                out.first_max_depth_class = t.cls;
            }
        } else {
            if (classes.empty() || classes.back() != t.cls) {
                r.position = i;
                r.error = classes.empty() ? "close bracket without an open bracket"
                                          : "close bracket does not match open class";
                return r;
            }
            classes.pop_back();
            children.pop_back();
        }
    }
    if (!classes.empty()) {
        r.position = tokens.size();
        r.error = "unclosed bracket";
        return r;
    }
    out.n_root_nodes = children.front();
    r.ok = true;
    return r;
}

DyckFeatures dyck_features(const std::vector<DyckToken>& tokens) {
    auto r = parse_dyck(tokens);
    if (!r.ok) throw ParseError(r.error, r.position);
    return r.features;
}

bool validate_dyck(const std::vector<DyckToken>& tokens, const DyckConfig& config) {
    if (tokens.empty() || tokens.size() > static_cast<std::size_t>(config.max_length)) return false;
    for (const auto& t : tokens)
        if (t.cls < 0 || t.cls >= config.n_bracket_types) return false;
    const auto r = parse_dyck(tokens);
    return r.ok && r.features.max_depth <= config.max_depth;
}

std::string token_text(const DyckToken& token) { return (token.open ? "(" : ")") + std::to_string(token.cls); }

DyckToken parse_token(const std::string& text) {
    if (text.size() < 2 || (text[0] != '(' && text[0] != ')'))
        throw ContractViolation("malformed bracket token '" + text + "'");
    std::size_t used = 0;
    int cls = 0;
    try {
        cls = std::stoi(text.substr(1), &used);
    } catch (const std::exception&) {
        throw ContractViolation("malformed bracket token '" + text + "'");
    }
    if (used != text.size() - 1 || cls < 0) throw ContractViolation("malformed bracket token '" + text + "'");
    return {text[0] == '(', cls};
}

void write_dyck_jsonl(const std::vector<DyckSentence>& sentences, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& s : sentences) {
        nlohmann::json rec;
        std::vector<std::string> tokens;
        for (const auto& t : s.tokens) tokens.push_back(token_text(t));
        rec["tokens"] = tokens;
        rec["features"] = {{"first_token_class", s.features.first_token_class},
                           {"first_max_depth_class", s.features.first_max_depth_class},
                           {"max_depth", s.features.max_depth},
                           {"n_root_nodes", s.features.n_root_nodes},
                           {"max_branching_factor", s.features.max_branching_factor}};
        out << rec.dump() << '\n';
    }
}

std::vector<std::vector<DyckToken>> read_dyck_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<DyckToken>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        std::vector<DyckToken> tokens;
        for (const auto& t : rec.at("tokens")) tokens.push_back(parse_token(t.get<std::string>()));
        out.push_back(std::move(tokens));
    }
    return out;
}

}  // namespace rblab
