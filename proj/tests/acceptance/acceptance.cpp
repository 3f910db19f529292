// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails; soft criteria are reported only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rblab/analysis.hpp"
#include "rblab/errors.hpp"
#include "rblab/recipes.hpp"
#include "rblab/seqgen.hpp"

using namespace rblab;

namespace {

// Pinned thresholds.
constexpr int kSeeds = 10;
constexpr int kRsaSeeds = 5;
constexpr double kGradRelTol = 1e-5;
constexpr double kGradEps = 1e-4;
constexpr double kAccuracy = 0.99;
constexpr double kFig2Gap = 0.15;
constexpr int kFig2GapSeeds = 8;
constexpr int kOrderSeeds = 8;
constexpr double kPatternSlack = 0.05;
constexpr int kPatternSeeds = 7;
constexpr int kPrevalenceSeeds = 7;
constexpr double kSteerOnTarget = 0.98;
constexpr double kSteerOffTarget = 0.02;
constexpr double kAlphaStep = 0.05;
constexpr double kAlphaMax = 4.0;
constexpr double kPcaEasyKeep2 = 0.98;
constexpr double kPcaHardKeep2 = 0.55;
constexpr double kPcaHardSomeK = 0.95;
constexpr std::size_t kPcaMaxK = 8;
constexpr double kPcaDegraded = 0.95;
constexpr int kPcaSeeds = 8;
constexpr double kDownstreamLowCenter = 0.5;
constexpr double kDownstreamLowBand = 0.1;
constexpr double kDownstreamHigh = 0.7;
constexpr int kDownstreamSeeds = 7;
constexpr int kSparsitySeeds = 8;
constexpr double kUntrainedProbe = 0.90;
constexpr double kGeneratorSeconds = 60.0;
constexpr double kBalanceSigmas = 5.0;
// Sum over n = 1..6 of Catalan(n) * 2^n: balanced strings of length <= 12 over 2 types.
constexpr std::size_t kBalancedUpTo12 = 2 + 8 + 40 + 224 + 1344 + 8448;

bool all_passed = true;

void report(bool pass, int id, const std::string& what, const std::string& detail, bool gating = true) {
    std::printf("%s  C%-2d %s%s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), gating ? "" : " (soft)",
                detail.c_str());
    std::fflush(stdout);
    if (gating && !pass) all_passed = false;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: correctness oracles
// ---------------------------------------------------------------------------

double gradient_rel_error(const MlpConfig& cfg, std::uint64_t seed) {
    auto model = MlpD::init(cfg);
    Rng rng(derive_seed(seed, 1));
    Matrix x(6, static_cast<Eigen::Index>(cfg.input_dim)), y(6, static_cast<Eigen::Index>(cfg.output_dim));
    // Central differences are meaningless across a leaky-ReLU kink, so redraw the
    // batch until every pre-activation sits well clear of zero.
    auto near_kink = [&] {
        for (const auto& p : forward(model, x).pre_activations)
            if (p.cwiseAbs().minCoeff() < 10 * kGradEps) return true;
        return false;
    };
    do {
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    } while (near_kink());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.bit();
    const std::vector<double> mask(cfg.output_dim, 1.0);
    const Mode mode = cfg.dropout_rate > 0 ? Mode::Train : Mode::Eval;
    auto loss = [&] {
        Rng r(derive_seed(seed, 2));
        return loss_and_grads(model, x, y, mask, mode, &r);
    };
    const auto analytic = loss();
    const auto grads = analytic.gradient_views();
    auto views = model.parameter_views();
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t t = 0; t < views.size(); ++t)
        for (std::size_t j = 0; j < views[t].size(); ++j) {
            const double saved = views[t][j];
            views[t][j] = saved + kGradEps;
            const double up = loss().total;
            views[t][j] = saved - kGradEps;
            const double down = loss().total;
            views[t][j] = saved;
            const double numeric = (up - down) / (2 * kGradEps);
            diff += std::pow(grads[t][j] - numeric, 2);
            norm_a += std::pow(grads[t][j], 2);
            norm_n += numeric * numeric;
        }
    return std::sqrt(diff) / (std::sqrt(norm_a) + std::sqrt(norm_n));
}

using Tokens = std::vector<DyckToken>;

struct Node {
    int cls = -1;
    std::vector<Node> children;
};

// Recursive descent; returns the failing position or nullopt on success.
std::optional<std::size_t> descend(const Tokens& t, std::size_t& pos, Node* parent) {
    while (pos < t.size() && t[pos].open) {
        Node child{t[pos].cls, {}};
        ++pos;
        if (auto e = descend(t, pos, parent ? &child : nullptr)) return e;
        if (pos == t.size()) return t.size();
        if (t[pos].cls != child.cls) return pos;
        ++pos;
        if (parent) parent->children.push_back(std::move(child));
    }
    return std::nullopt;
}

std::optional<std::size_t> oracle_error(const Tokens& t, Node* root) {
    if (t.empty()) return 0;
    std::size_t pos = 0;
    if (auto e = descend(t, pos, root)) return e;
    if (pos < t.size()) return pos;
    return std::nullopt;
}

int tree_depth(const Node& n) {
    int d = 0;
    for (const auto& c : n.children) d = std::max(d, tree_depth(c));
    return d + 1;
}

DyckFeatures tree_features(const Node& root) {
    DyckFeatures f;
    f.first_token_class = root.children.front().cls;
    f.n_root_nodes = static_cast<int>(root.children.size());
    f.max_depth = tree_depth(root) - 1;
    bool found = false;
    std::function<void(const Node&, int)> walk = [&](const Node& n, int depth) {
        f.max_branching_factor = std::max(f.max_branching_factor, static_cast<int>(n.children.size()));
        if (!found && depth == f.max_depth && n.cls >= 0) {
            f.first_max_depth_class = n.cls;
            found = true;
        }
        for (const auto& c : n.children) walk(c, depth + 1);
    };
    walk(root, 0);
    return f;
}

void criterion_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    // Gradients.
    double worst_grad = 0;
    struct V {
        Nonlinearity nl;
        bool residual;
        double dropout;
    };
    for (const V v : {V{Nonlinearity::LeakyRelu, false, 0.0}, V{Nonlinearity::Tanh, false, 0.0},
                      V{Nonlinearity::LeakyRelu, true, 0.0}, V{Nonlinearity::Tanh, true, 0.25}})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            MlpConfig c;
            c.input_dim = 5;
            c.hidden_sizes = {7, 7, 4};
            c.output_dim = 3;
            c.nonlinearity = v.nl;
            c.residual = v.residual;
            c.dropout_rate = v.dropout;
            c.seed = seed;
            worst_grad = std::max(worst_grad, gradient_rel_error(c, seed));
        }
    // Least squares and PCA.
    double worst_orth = 0, worst_recon = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Matrix a(40, 6), b(40, 2);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.normal();
        const Matrix x = linalg::solve_least_squares(a, b);
        worst_orth = std::max(worst_orth, (a.transpose() * (b - a * x)).cwiseAbs().maxCoeff() / (a.norm() * b.norm()));
        const auto pca = linalg::principal_components(a, 6);
        worst_recon = std::max(worst_recon, (pca.reconstruct(a) - a).cwiseAbs().maxCoeff());
    }
    // Dyck extractor against recursive descent on every string of length <= 12 over 2 types.
    std::size_t strings = 0, balanced = 0, mismatches = 0;
    Tokens t;
    for (int len = 1; len <= 12; ++len) {
        t.assign(static_cast<std::size_t>(len), DyckToken{});
        for (std::uint64_t code = 0; code < (1ull << (2 * len)); ++code) {
            for (int i = 0; i < len; ++i) {
                const auto sym = (code >> (2 * i)) & 3u;
                t[static_cast<std::size_t>(i)] = {sym < 2, static_cast<int>(sym & 1u)};
            }
            ++strings;
            const auto expected = oracle_error(t, nullptr);
            const auto got = parse_dyck(t);
            if (!got.ok || expected) {
                mismatches += got.ok || !expected || *expected != got.position;
                continue;
            }
            ++balanced;
            Node root;
            oracle_error(t, &root);
            mismatches += !(got.features == tree_features(root));
        }
    }
    // Truth tables.
    std::size_t table_errors = 0;
    for (std::size_t arity = 2; arity <= 6; ++arity)
        for (auto kind : {FeatureKind::And, FeatureKind::Or, FeatureKind::Xor2, FeatureKind::Parity3,
                          FeatureKind::SumMod2_4}) {
            if ((kind == FeatureKind::Xor2 && arity != 2) || (kind == FeatureKind::Parity3 && arity != 3) ||
                (kind == FeatureKind::SumMod2_4 && arity != 4))
                continue;
            FeatureSpec spec;
            spec.kind = kind;
            for (std::size_t i = 0; i < arity; ++i) spec.input_indices.push_back(i);
            for (unsigned bits = 0; bits < (1u << arity); ++bits) {
                std::vector<std::uint8_t> in(arity);
                int ones = 0;
                for (std::size_t j = 0; j < arity; ++j) ones += in[j] = (bits >> j) & 1u;
                const int expected = kind == FeatureKind::And  ? ones == static_cast<int>(arity)
                                     : kind == FeatureKind::Or ? ones > 0
                                                               : ones % 2;
                table_errors += feature_value(spec, in) != expected;
            }
        }
    const bool pass = worst_grad < kGradRelTol && worst_orth < 1e-12 && worst_recon < 1e-9 && mismatches == 0 &&
                      balanced == kBalancedUpTo12 && table_errors == 0;
    std::string detail = "grad rel err " + fmt("%.2e", worst_grad) + ", ls orth " + fmt("%.1e", worst_orth) +
                         ", pca recon " + fmt("%.1e", worst_recon) + ", dyck " + std::to_string(strings) +
                         " strings (" + std::to_string(balanced) + " balanced) mismatches " +
                         std::to_string(mismatches) + ", truth-table errors " + std::to_string(table_errors) + ", " +
                         fmt("%.1f s", seconds_since(t0));
    report(pass, 1, "correctness oracles", detail);
}

// ---------------------------------------------------------------------------
// Training-based criteria
// ---------------------------------------------------------------------------

struct Trained {
    RunRecord rec;
    BoolDataset data;
};

Trained train(const ExperimentConfig& cfg) {
    Trained t;
    t.data = generate(cfg.resolved().dataset);
    RunOptions o;
    o.dataset = &t.data;
    o.keep_snapshots = false;
    t.rec = run(cfg, o);
    return t;
}

double r2(const Trained& t, std::size_t f) {
    return variance_explained(t.rec.final_snapshot("validation"), t.rec.final_snapshot("test"),
                              feature_column(t.data.validation.labels, f), feature_column(t.data.test.labels, f))
        .r2_raw;
}

double pattern_r2(const Trained& t, std::size_t f) {
    return variance_explained_patterns(t.rec.config.dataset.features[f], t.rec.final_snapshot("validation"),
                                       t.rec.final_snapshot("test"), t.data.validation.inputs, t.data.test.inputs)
        .r2_raw;
}

double min_accuracy(const Trained& t) {
    const auto& a = t.rec.evals.back().accuracy;
    return *std::min_element(a.begin(), a.end());
}

std::string list(const std::vector<double>& v, const char* f = "%.2f") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
    return s;
}

void criterion_fig2(const std::vector<Trained>& runs) {
    int accurate = 0, gap_ok = 0, order_ok = 0;
    std::vector<double> gaps;
    for (const auto& t : runs) {
        accurate += min_accuracy(t) >= kAccuracy && t.rec.status == RunStatus::Completed;
        const double gap = r2(t, 0) - r2(t, 1);
        gaps.push_back(gap);
        gap_ok += gap >= kFig2Gap;
        const auto e = t.rec.first_step_reaching(0, kAccuracy), h = t.rec.first_step_reaching(1, kAccuracy);
        order_ok += e && h && *e < *h;
    }
    const int n = static_cast<int>(runs.size());
    report(accurate == n && gap_ok >= kFig2GapSeeds && order_ok == n, 2, "easy/hard representation gap",
           std::to_string(accurate) + "/" + std::to_string(n) + " runs >= 0.99 on both; gap >= 0.15 in " +
               std::to_string(gap_ok) + "/" + std::to_string(n) + " (gaps " + list(gaps) + "); easy first in " +
               std::to_string(order_ok) + "/" + std::to_string(n));
}

void criterion_training_order(std::uint64_t n_seeds) {
    int same_sign = 0, narrowed = 0, patterns = 0;
    std::vector<double> sim_gap, pe_gap, ph_gap, ph_pattern_margin;
    for (std::uint64_t s = 0; s < n_seeds; ++s) {
        const auto sim = train(training_order_config(s, TrainingOrder::Simultaneous));
        const auto pe = train(training_order_config(s, TrainingOrder::PretrainEasy));
        const auto ph = train(training_order_config(s, TrainingOrder::PretrainHard));
        const double gs = r2(sim, 0) - r2(sim, 1), ge = r2(pe, 0) - r2(pe, 1), gh = r2(ph, 0) - r2(ph, 1);
        sim_gap.push_back(gs);
        pe_gap.push_back(ge);
        ph_gap.push_back(gh);
        same_sign += gs > 0 && ge > 0;
        narrowed += gh < gs && gh >= 0;
        const double margin = pattern_r2(ph, 1) - (r2(ph, 0) - kPatternSlack);
        ph_pattern_margin.push_back(margin);
        patterns += margin >= 0;
    }
    const auto n = std::to_string(n_seeds);
    report(same_sign >= kOrderSeeds && narrowed >= kOrderSeeds && patterns >= kPatternSeeds, 3, "training order",
           "pretrain-easy same sign " + std::to_string(same_sign) + "/" + n + "; pretrain-hard narrower with easy >= hard " +
               std::to_string(narrowed) + "/" + n + "; hard pattern R2 >= easy R2 - 0.05 under pretrain-hard " +
               std::to_string(patterns) + "/" + n + " (gaps sim " + list(sim_gap) + " | easy-first " + list(pe_gap) +
               " | hard-first " + list(ph_gap) + "; pattern margins " + list(ph_pattern_margin) + ")");
}

void criterion_prevalence(std::uint64_t n_seeds) {
    int accurate = 0, both = 0;
    std::vector<double> easy_diff, hard_diff;
    for (std::uint64_t s = 0; s < n_seeds; ++s) {
        const auto t = train(prevalence_config(s));
        accurate += min_accuracy(t) >= kAccuracy;
        const double de = r2(t, 0) - r2(t, 1), dh = r2(t, 2) - r2(t, 3);
        easy_diff.push_back(de);
        hard_diff.push_back(dh);
        both += de > 0 && dh > 0;
    }
    const auto n = std::to_string(n_seeds);
    report(accurate == static_cast<int>(n_seeds) && both >= kPrevalenceSeeds, 4, "prevalence",
           "all features >= 0.99 in " + std::to_string(accurate) + "/" + n + "; common > rare for both kinds in " +
               std::to_string(both) + "/" + n + " (easy " + list(easy_diff) + " | hard " + list(hard_diff) + ")");
}

// Smallest alpha-grid magnitude flipping every label of `feature`; infinity when none does.
double full_flip_magnitude(const Trained& t, const Vector& d, std::size_t feature) {
    const auto& test = t.rec.final_snapshot("test");
    for (double alpha = kAlphaStep; alpha <= kAlphaMax + 1e-9; alpha += kAlphaStep) {
        const auto r = intervene(t.rec.final_model, test, d, alpha, feature);
        if (r.flip_fraction[feature] >= 1.0) return r.magnitude;
    }
    return std::numeric_limits<double>::infinity();
}

void criterion_intervention(const std::vector<Trained>& runs) {
    int targeted = 0, ordered = 0;
    std::vector<double> worst;
    std::string magnitudes;
    for (const auto& t : runs) {
        const auto& val = t.rec.final_snapshot("validation");
        const auto& test = t.rec.final_snapshot("test");
        bool ok = true;
        Vector d[2];
        for (std::size_t f = 0; f < 2; ++f) {
            d[f] = steering_vector(fit_probe(feature_column(t.data.validation.labels, f), val.as_double())).direction;
            const auto r = intervene(t.rec.final_model, test, d[f], 1.0, f);
            ok = ok && r.flip_fraction[f] >= kSteerOnTarget && r.flip_fraction[1 - f] <= kSteerOffTarget;
            worst.push_back(r.flip_fraction[f]);
            worst.push_back(r.flip_fraction[1 - f]);
        }
        targeted += ok;
        const double me = full_flip_magnitude(t, d[0], 0), mh = full_flip_magnitude(t, d[1], 1);
        ordered += mh < me;
        magnitudes += (magnitudes.empty() ? "" : " ") + fmt("%.2f", mh) + "<" + fmt("%.2f", me);
    }
    const int n = static_cast<int>(runs.size());
    report(targeted == n && ordered == n, 5, "steering interventions",
           "alpha=1 targeted flips in " + std::to_string(targeted) + "/" + std::to_string(n) +
               " (easy on/off, hard on/off per seed: " + list(worst, "%.3f") + "); hard full-flip magnitude < easy in " +
               std::to_string(ordered) + "/" + std::to_string(n) + " (" + magnitudes + ")");
}

void criterion_pca(const std::vector<Trained>& runs) {
    int ok = 0;
    std::string detail;
    for (const auto& t : runs) {
        const auto& test = t.rec.final_snapshot("test");
        const auto& labels = t.data.test.labels;
        const auto keep2 = pca_readout(t.rec.final_model, test, labels, 2, PcaMode::KeepTop);
        bool hard_some_k = false;
        for (std::size_t k = 1; k <= kPcaMaxK && !hard_some_k; ++k)
            hard_some_k = pca_readout(t.rec.final_model, test, labels, k, PcaMode::KeepTop)[1] >= kPcaHardSomeK;
        const auto units = static_cast<std::size_t>(test.matrix.cols());
        std::size_t drop_easy = units + 1, drop_hard = units + 1;  // "never" sorts last
        for (std::size_t k = 1; k <= units && (drop_easy > units || drop_hard > units); ++k) {
            const auto a = pca_readout(t.rec.final_model, test, labels, k, PcaMode::DropTop);
            if (drop_easy > units && a[0] < kPcaDegraded) drop_easy = k;
            if (drop_hard > units && a[1] < kPcaDegraded) drop_hard = k;
        }
        const bool pass = keep2[0] >= kPcaEasyKeep2 && keep2[1] <= kPcaHardKeep2 && hard_some_k && drop_easy < drop_hard;
        ok += pass;
        auto k_str = [&](std::size_t k) { return k > units ? std::string("never") : std::to_string(k); };
        detail += (detail.empty() ? "" : "; ") + fmt("%.2f", keep2[0]) + "/" + fmt("%.2f", keep2[1]) +
                  (hard_some_k ? " hard>=0.95@k<=8" : " hard<0.95@k<=8") + " drop " + k_str(drop_easy) + "<" +
                  k_str(drop_hard);
    }
    report(ok >= kPcaSeeds, 6, "PCA keep/drop readout",
           std::to_string(ok) + "/" + std::to_string(runs.size()) + " seeds (keep-2 easy/hard, drop-k easy<hard: " +
               detail + ")");
}

void criterion_rsa(std::uint64_t n_seeds) {
    const auto tasks = rsa_tasks();
    std::map<std::string, std::vector<RepresentationSnapshot>> snaps;
    const auto stimuli = uniform_stimuli(rsa_config(tasks[0], 0).dataset.n_inputs, {}, 256, 12345);
    for (const auto& task : tasks)
        for (std::uint64_t s = 0; s < n_seeds; ++s) {
            const auto t = train(rsa_config(task, s));
            snaps[task.name].push_back(capture_snapshot(t.rec.final_model, stimuli.inputs,
                                                        t.rec.final_model.n_hidden() - 1, t.rec.run_id, "stimuli"));
        }
    std::string detail;
    bool pass = false;
    for (auto metric : {RdmMetric::Euclidean, RdmMetric::Cosine}) {
        std::map<std::string, std::vector<Rdm>> rdms;
        for (const auto& [name, v] : snaps)
            for (const auto& s : v) rdms[name].push_back(rdm(s, metric));
        for (auto corr : {Correlation::Pearson, Correlation::Spearman}) {
            auto sim = [&](const Rdm& a, const Rdm& b) { return rsa_compare(a, b, corr); };
            double ll = 0, ls = 0;
            int n_ll = 0, n_ls = 0;
            for (std::size_t i = 0; i < n_seeds; ++i)
                for (std::size_t j = 0; j < n_seeds; ++j) {
                    if (j > i) ll += sim(rdms["LL"][i], rdms["LL"][j]), ++n_ll;
                    ls += sim(rdms["LL"][i], rdms["LS"][j]), ++n_ls;
                }
            ll /= n_ll;
            ls /= n_ls;
            // Inversion samples: an SS pair and an LL network.
            int inverted = 0, samples = 0;
            for (std::size_t i = 0; i < n_seeds; ++i)
                for (std::size_t j = i + 1; j < n_seeds; ++j)
                    for (std::size_t k = 0; k < n_seeds; ++k) {
                        const double within = sim(rdms["SS"][i], rdms["SS"][j]);
                        inverted += within < sim(rdms["SS"][i], rdms["LL"][k]) && within < sim(rdms["SS"][j], rdms["LL"][k]);
                        ++samples;
                    }
            const double frac = static_cast<double>(inverted) / samples;
            if (metric == RdmMetric::Euclidean && corr == Correlation::Pearson) pass = ll > ls && frac > 0.5;
            detail += (detail.empty() ? "" : "; ") + to_string(metric) + "/" + to_string(corr) + " LL-LL " +
                      fmt("%.3f", ll) + " vs LL-LS " + fmt("%.3f", ls) + ", SS inversion " + fmt("%.2f", frac);
        }
    }
    report(pass, 7, "RSA structure", "gated on euclidean/pearson: " + detail);
}

void criterion_downstream(const std::vector<Trained>& runs) {
    const DownstreamSetup setup;
    int ok[2] = {0, 0};
    std::string detail;
    for (const auto& t : runs) {
        const std::size_t layer = t.rec.final_model.n_hidden() - 1;
        double pref[2][2];
        int qi = 0;
        for (double q : {0.55, 0.95}) {
            const auto joint = downstream_dataset(t.rec.config.dataset, q, DownstreamMode::Joint, setup.train_size,
                                                  derive_seed(t.rec.config.seed, 200));
            const auto conflict = downstream_dataset(t.rec.config.dataset, q, DownstreamMode::Conflict,
                                                     setup.conflict_size, derive_seed(t.rec.config.seed, 201));
            const Matrix jr = capture_snapshot(t.rec.final_model, joint.inputs, layer, "", "joint").as_double();
            const Matrix cr = capture_snapshot(t.rec.final_model, conflict.inputs, layer, "", "conflict").as_double();
            const Vector g = joint.labels.col(joint.labels.cols() - 1);
            const Vector easy = conflict.labels.col(0);
            int ci = 0;
            for (auto kind : {DownstreamClassifier::Linear, DownstreamClassifier::Mlp1Hidden}) {
                DownstreamOptions o;
                o.seed = derive_seed(t.rec.config.seed, 202);
                pref[ci++][qi] = downstream_bias(jr, linalg::as_span(g), cr, linalg::as_span(easy), kind, o);
            }
            ++qi;
        }
        for (int c = 0; c < 2; ++c) {
            ok[c] += std::abs(pref[c][0] - kDownstreamLowCenter) <= kDownstreamLowBand && pref[c][1] > kDownstreamHigh;
            detail += (detail.empty() ? "" : " ") + fmt("%.2f", pref[c][0]) + "/" + fmt("%.2f", pref[c][1]);
        }
    }
    const auto n = std::to_string(runs.size());
    report(ok[0] >= kDownstreamSeeds && ok[1] >= kDownstreamSeeds, 8, "downstream bias",
           "linear " + std::to_string(ok[0]) + "/" + n + ", 1-hidden MLP " + std::to_string(ok[1]) + "/" + n +
               " (preference at q=0.55/0.95, linear then MLP per seed: " + detail + ")");
}

void criterion_sparsity(const std::vector<Trained>& runs) {
    int ok = 0;
    std::string detail;
    for (const auto& t : runs) {
        const auto& val = t.rec.final_snapshot("validation");
        const auto z = standardize(val.as_double(), val.as_double());
        double s[2];
        for (std::size_t f = 0; f < 2; ++f) {
            const Vector y = t.data.validation.labels.col(static_cast<Eigen::Index>(f));
            s[f] = sparsity_score(z.reps, linalg::as_span(y));
        }
        ok += s[1] > s[0];
        detail += (detail.empty() ? "" : " ") + fmt("%.3f", s[0]) + "<" + fmt("%.3f", s[1]);
    }
    report(ok >= kSparsitySeeds, 9, "sparsity",
           "hard > easy in " + std::to_string(ok) + "/" + std::to_string(runs.size()) + " (easy<hard: " + detail + ")");
}

void criterion_untrained() {
    std::vector<double> acc;
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
        const auto cfg = easy_hard_config(s).resolved();
        const auto data = generate(cfg.dataset);
        const auto model = MlpF::init(cfg.mlp);
        const std::size_t layer = model.n_hidden() - 1;
        const Matrix v = capture_snapshot(model, data.validation.inputs, layer, "", "validation").as_double();
        const Matrix t = capture_snapshot(model, data.test.inputs, layer, "", "test").as_double();
        acc.push_back(linear_probe_accuracy(v, data.validation.labels, t, data.test.labels, 0));
    }
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / acc.size();
    report(mean >= kUntrainedProbe, 10, "untrained easy probe",
           "mean accuracy " + fmt("%.3f", mean) + " on the 64-input default (" + list(acc, "%.3f") + ")", false);
}

void criterion_generators() {
    const auto t0 = std::chrono::steady_clock::now();
    DyckConfig cfg;
    DyckSampler sampler(cfg);
    std::size_t valid = 0;
    int depth = 0;
    std::size_t length = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto s = sampler.next();
        valid += validate_dyck(s.tokens, cfg);
        depth = std::max(depth, s.features.max_depth);
        length = std::max(length, s.tokens.size());
    }
    auto letters = default_letter_config(0);
    const auto data = generate_letter_dataset(letters);
    const auto& y = data.train.labels;
    const double n = static_cast<double>(y.rows());
    const double tol = kBalanceSigmas * 0.5 / std::sqrt(n);
    double worst_mean = 0, worst_corr = 0;
    for (Eigen::Index a = 0; a < y.cols(); ++a) {
        worst_mean = std::max(worst_mean, std::abs(y.col(a).mean() - 0.5));
        for (Eigen::Index b = a + 1; b < y.cols(); ++b) {
            const double cov = ((y.col(a).array() - y.col(a).mean()) * (y.col(b).array() - y.col(b).mean())).mean();
            worst_corr = std::max(worst_corr, std::abs(cov) / 0.25);
        }
    }
    const double secs = seconds_since(t0);
    const bool pass = valid == 10000 && depth <= 10 && length <= 64 && worst_mean <= tol && worst_corr <= 2 * tol &&
                      secs < kGeneratorSeconds;
    report(pass, 11, "generators",
           std::to_string(valid) + "/10000 Dyck valid, max depth " + std::to_string(depth) + ", max length " +
               std::to_string(length) + "; letters worst |mean-0.5| " + fmt("%.4f", worst_mean) + ", worst |corr| " +
               fmt("%.4f", worst_corr) + " (tol " + fmt("%.4f", tol) + "); " + fmt("%.1f s", secs));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_oracles();
    criterion_generators();
    criterion_untrained();

    std::vector<Trained> fig2;
    for (std::uint64_t s = 0; s < kSeeds; ++s) fig2.push_back(train(fig2_config(s)));
    criterion_fig2(fig2);
    criterion_intervention(fig2);
    criterion_pca(fig2);
    criterion_sparsity(fig2);
    criterion_downstream(fig2);
    criterion_rsa(kRsaSeeds);
    criterion_training_order(kSeeds);
    criterion_prevalence(kSeeds);

    std::printf("acceptance finished in %.0f s: %s\n", seconds_since(t0), all_passed ? "all gating criteria passed"
                                                                                      : "some gating criteria failed");
    return all_passed ? 0 : 1;
}
