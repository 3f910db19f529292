#include "rblab/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "rblab/errors.hpp"

namespace rblab {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config error at " + (where.empty() ? std::string("/") : where) + ": " + what);
}

/// Typed access to one JSON object with pointer-style locations in errors.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail(where_, "expected an object");
    }

    std::string at(const std::string& key) const { return where_ + "/" + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key) const {
        seen_.insert(key);
        if (!j_.contains(key)) fail(at(key), "missing required field");
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key, T fallback) const {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(key);
    }

    template <class T>
    T require(const std::string& key) const {
        raw(key);
        return convert<T>(key);
    }

    /// Throws on keys that no getter has looked at.
    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) fail(at(item.key()), "unknown field");
    }

private:
    template <class T>
    T convert(const std::string& key) const {
        const json& v = j_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(at(key), "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) fail(at(key), "expected an integer");
            if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
                fail(at(key), "expected a nonnegative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) fail(at(key), "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(at(key), "expected a string");
        }
        try {
            return v.get<T>();
        } catch (const json::exception& e) {
            fail(at(key), e.what());
        }
    }

    const json& j_;
    std::string where_;
    mutable std::set<std::string> seen_;
};

template <class F>
auto checked(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ContractViolation& e) {
        fail(where, e.what());
    }
}

}  // namespace

std::string to_string(LetterFeatureKind kind) {
    switch (kind) {
        case LetterFeatureKind::ExactMatch: return "exact_match";
        case LetterFeatureKind::AllButOne: return "all_but_one";
        case LetterFeatureKind::SumMatchMod2: return "sum_match_mod2";
    }
    return "?";
}

LetterFeatureKind letter_feature_kind_from_string(const std::string& name) {
    for (auto k : {LetterFeatureKind::ExactMatch, LetterFeatureKind::AllButOne, LetterFeatureKind::SumMatchMod2})
        if (to_string(k) == name) return k;
    throw ContractViolation("unknown letter feature kind '" + name + "'");
}

json to_json(const FeatureSpec& s) {
    json j = {{"kind", to_string(s.kind)},
              {"input_indices", s.input_indices},
              {"prevalence", s.prevalence},
              {"redundancy", s.redundancy}};
    if (!s.name.empty()) j["name"] = s.name;
    return j;
}

json to_json(const BoolDatasetConfig& c) {
    json features = json::array();
    for (const auto& f : c.features) features.push_back(to_json(f));
    return {{"n_inputs", c.n_inputs},
            {"features", features},
            {"sizes", {{"train", c.sizes.train}, {"validation", c.sizes.validation}, {"test", c.sizes.test}}},
            {"seed", c.seed}};
}

BoolDatasetConfig bool_dataset_config_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    BoolDatasetConfig c;
    c.n_inputs = f.get<std::size_t>("n_inputs", c.n_inputs);
    c.seed = f.get<std::uint64_t>("seed", c.seed);
    if (f.has("sizes")) {
        Fields s(f.raw("sizes"), f.at("sizes"));
        c.sizes.train = s.get<std::size_t>("train", c.sizes.train);
        c.sizes.validation = s.get<std::size_t>("validation", c.sizes.validation);
        c.sizes.test = s.get<std::size_t>("test", c.sizes.test);
        s.finish();
    }
    const json& feats = f.raw("features");
    if (!feats.is_array()) fail(f.at("features"), "expected an array");
    // Features without explicit indices are laid out after the highest used index.
    std::size_t next = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const std::string loc = f.at("features") + "/" + std::to_string(i);
        Fields ff(feats[i], loc);
        FeatureSpec spec;
        spec.kind = checked(ff.at("kind"), [&] { return feature_kind_from_string(ff.require<std::string>("kind")); });
        spec.prevalence = ff.get<double>("prevalence", 0.5);
        spec.redundancy = ff.get<std::size_t>("redundancy", 1);
        spec.name = ff.get<std::string>("name", "");
        const auto arity = ff.get<std::size_t>("arity", 3);
        if (ff.has("input_indices")) {
            spec.input_indices = ff.require<std::vector<std::size_t>>("input_indices");
        } else {
            const std::size_t width = spec.kind == FeatureKind::Linear ? spec.redundancy : default_arity(spec.kind, arity);
            for (std::size_t k = 0; k < width; ++k) spec.input_indices.push_back(next + k);
        }
        if (spec.kind != FeatureKind::Linear && ff.has("redundancy") && spec.redundancy != 1)
            fail(ff.at("redundancy"), "redundancy applies to linear features only");
        for (auto idx : spec.input_indices) next = std::max(next, idx + 1);
        ff.finish();
        c.features.push_back(std::move(spec));
    }
    f.finish();
    checked(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

json to_json(const MlpConfig& c) {
    return {{"input_dim", c.input_dim},       {"hidden_sizes", c.hidden_sizes},
            {"output_dim", c.output_dim},     {"nonlinearity", to_string(c.nonlinearity)},
            {"residual", c.residual},         {"dropout_rate", c.dropout_rate},
            {"init_scale", c.init_scale},     {"seed", c.seed}};
}

MlpConfig mlp_config_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    MlpConfig c;
    c.input_dim = f.get<std::size_t>("input_dim", c.input_dim);
    c.hidden_sizes = f.get<std::vector<std::size_t>>("hidden_sizes", c.hidden_sizes);
    c.output_dim = f.get<std::size_t>("output_dim", c.output_dim);
    if (f.has("nonlinearity"))
        c.nonlinearity = checked(f.at("nonlinearity"),
                                 [&] { return nonlinearity_from_string(f.require<std::string>("nonlinearity")); });
    c.residual = f.get<bool>("residual", c.residual);
    c.dropout_rate = f.get<double>("dropout_rate", c.dropout_rate);
    c.init_scale = f.get<double>("init_scale", c.init_scale);
    c.seed = f.get<std::uint64_t>("seed", c.seed);
    f.finish();
    checked(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

json to_json(const OptimizerSpec& s) {
    return {{"kind", to_string(s.kind)}, {"learning_rate", s.learning_rate}, {"weight_decay", s.weight_decay},
            {"beta1", s.beta1},          {"beta2", s.beta2},                 {"epsilon", s.epsilon}};
}

OptimizerSpec optimizer_spec_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    const auto kind = checked(f.at("kind"), [&] { return optimizer_kind_from_string(f.require<std::string>("kind")); });
    OptimizerSpec s = OptimizerSpec::defaults(kind, f.get<double>("learning_rate", 1e-3));
    s.weight_decay = f.get<double>("weight_decay", s.weight_decay);
    s.beta1 = f.get<double>("beta1", s.beta1);
    s.beta2 = f.get<double>("beta2", s.beta2);
    s.epsilon = f.get<double>("epsilon", s.epsilon);
    f.finish();
    checked(where, [&] {
        s.validate();
        return 0;
    });
    return s;
}

json to_json(const TrainingRegime& r) {
    return {{"kind", to_string(r.kind)},
            {"pretrain_features", r.pretrain_features},
            {"pretrain_stop_accuracy", r.pretrain_stop_accuracy},
            {"pretrain_max_steps", r.pretrain_max_steps}};
}

TrainingRegime regime_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    TrainingRegime r;
    r.kind = checked(f.at("kind"), [&] { return regime_kind_from_string(f.require<std::string>("kind")); });
    r.pretrain_features = f.get<std::vector<std::size_t>>("pretrain_features", {});
    r.pretrain_stop_accuracy = f.get<double>("pretrain_stop_accuracy", r.pretrain_stop_accuracy);
    r.pretrain_max_steps = f.get<std::uint64_t>("pretrain_max_steps", r.pretrain_max_steps);
    f.finish();
    return r;
}

json to_json(const SnapshotSchedule& s) {
    return {{"log_base", s.log_base}, {"explicit_steps", s.explicit_steps}};
}

SnapshotSchedule schedule_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    SnapshotSchedule s;
    s.log_base = f.get<double>("log_base", s.log_base);
    s.explicit_steps = f.get<std::vector<std::uint64_t>>("explicit_steps", {});
    f.finish();
    checked(where, [&] {
        s.validate();
        return 0;
    });
    return s;
}

json to_json(const ExperimentConfig& c) {
    return {{"name", c.name},
            {"dataset", to_json(c.dataset)},
            {"mlp", to_json(c.mlp)},
            {"optimizer", to_json(c.optimizer)},
            {"regime", to_json(c.regime)},
            {"max_steps", c.max_steps},
            {"batch_size", c.batch_size == 0 ? json("full") : json(c.batch_size)},
            {"snapshots", to_json(c.snapshots)},
            {"eval_every", c.eval_every},
            {"stop_when_all_accurate", c.stop_when_all_accurate},
            {"stop_patience", c.stop_patience},
            {"capture_all_layers", c.capture_all_layers},
            {"seed", c.seed}};
}

ExperimentConfig experiment_config_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    ExperimentConfig c;
    c.name = f.get<std::string>("name", c.name);
    c.dataset = bool_dataset_config_from_json(f.raw("dataset"), f.at("dataset"));
    if (f.has("mlp")) c.mlp = mlp_config_from_json(f.raw("mlp"), f.at("mlp"));
    if (f.has("optimizer")) c.optimizer = optimizer_spec_from_json(f.raw("optimizer"), f.at("optimizer"));
    if (f.has("regime")) c.regime = regime_from_json(f.raw("regime"), f.at("regime"));
    if (f.has("snapshots")) c.snapshots = schedule_from_json(f.raw("snapshots"), f.at("snapshots"));
    c.max_steps = f.get<std::uint64_t>("max_steps", c.max_steps);
    if (f.has("batch_size")) {
        const json& b = f.raw("batch_size");
        if (b.is_string() && b.get<std::string>() == "full")
            c.batch_size = 0;
        else if (b.is_number_unsigned() && b.get<std::size_t>() > 0)
            c.batch_size = b.get<std::size_t>();
        else
            fail(f.at("batch_size"), "expected a positive integer or \"full\"");
    }
    c.eval_every = f.get<std::uint64_t>("eval_every", c.eval_every);
    c.stop_when_all_accurate = f.get<double>("stop_when_all_accurate", c.stop_when_all_accurate);
    c.stop_patience = f.get<int>("stop_patience", c.stop_patience);
    c.capture_all_layers = f.get<bool>("capture_all_layers", c.capture_all_layers);
    c.seed = f.get<std::uint64_t>("seed", c.seed);
    f.finish();
    // The network width must follow the dataset unless set explicitly.
    if (!(f.has("mlp") && j.at("mlp").contains("input_dim"))) c.mlp.input_dim = c.dataset.n_inputs;
    if (!(f.has("mlp") && j.at("mlp").contains("output_dim"))) c.mlp.output_dim = c.dataset.features.size();
    checked(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

json to_json(const DyckConfig& c) {
    return {{"n_bracket_types", c.n_bracket_types},
            {"max_depth", c.max_depth},
            {"max_length", c.max_length},
            {"same_type_continuation_prob", c.same_type_continuation_prob},
            {"root_termination_prob", c.root_termination_prob},
            {"seed", c.seed}};
}

DyckConfig dyck_config_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    DyckConfig c;
    c.n_bracket_types = f.get<int>("n_bracket_types", c.n_bracket_types);
    c.max_depth = f.get<int>("max_depth", c.max_depth);
    c.max_length = f.get<int>("max_length", c.max_length);
    c.same_type_continuation_prob = f.get<double>("same_type_continuation_prob", c.same_type_continuation_prob);
    c.root_termination_prob = f.get<double>("root_termination_prob", c.root_termination_prob);
    c.seed = f.get<std::uint64_t>("seed", c.seed);
    f.finish();
    checked(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

json to_json(const LetterDatasetConfig& c) {
    json features = json::array();
    for (const auto& lf : c.features) features.push_back({{"kind", to_string(lf.kind)}, {"target", lf.target}});
    return {{"vocabulary", c.vocabulary},
            {"chunk_length", c.chunk_length},
            {"features", features},
            {"sizes", {{"train", c.sizes.train}, {"validation", c.sizes.validation}, {"test", c.sizes.test}}},
            {"seed", c.seed},
            {"rejection_budget", c.rejection_budget}};
}

LetterDatasetConfig letter_config_from_json(const json& j, const std::string& where) {
    Fields f(j, where);
    const auto seed = f.get<std::uint64_t>("seed", 0);
    // Without an explicit feature list, the default eight-feature set is drawn from the seed.
    LetterDatasetConfig c = default_letter_config(seed);
    c.vocabulary = f.get<std::string>("vocabulary", c.vocabulary);
    c.chunk_length = f.get<std::size_t>("chunk_length", c.chunk_length);
    c.rejection_budget = f.get<int>("rejection_budget", c.rejection_budget);
    if (f.has("sizes")) {
        Fields s(f.raw("sizes"), f.at("sizes"));
        c.sizes.train = s.get<std::size_t>("train", c.sizes.train);
        c.sizes.validation = s.get<std::size_t>("validation", c.sizes.validation);
        c.sizes.test = s.get<std::size_t>("test", c.sizes.test);
        s.finish();
    }
    if (f.has("features")) {
        const json& feats = f.raw("features");
        if (!feats.is_array()) fail(f.at("features"), "expected an array");
        c.features.clear();
        for (std::size_t i = 0; i < feats.size(); ++i) {
            Fields ff(feats[i], f.at("features") + "/" + std::to_string(i));
            LetterFeature lf;
            lf.kind = checked(ff.at("kind"),
                              [&] { return letter_feature_kind_from_string(ff.require<std::string>("kind")); });
            lf.target = ff.require<std::string>("target");
            ff.finish();
            c.features.push_back(lf);
        }
    }
    f.finish();
    checked(where, [&] {
        c.validate();
        return 0;
    });
    return c;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": invalid JSON: " + e.what());
    }
}

}  // namespace rblab
