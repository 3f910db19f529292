#include "rblab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rblab/errors.hpp"
#include "rblab/optim.hpp"

namespace rblab {

namespace {

void check_pair(const RepresentationSnapshot& val, const RepresentationSnapshot& test, const char* who) {
    if (val.matrix.cols() != test.matrix.cols()) throw ContractViolation(std::string(who) + ": unit counts differ");
    if (val.layer != test.layer || val.run_id != test.run_id || val.step != test.step)
        throw ContractViolation(std::string(who) + ": validation and test snapshots come from different captures");
    if (val.matrix.rows() < 2) throw ContractViolation(std::string(who) + ": need at least two validation stimuli");
}

void check_design(const Matrix& design, const RepresentationSnapshot& s, const char* who) {
    if (design.rows() != s.matrix.rows())
        throw ContractViolation(std::string(who) + ": design has " + std::to_string(design.rows()) +
                                " rows, snapshot has " + std::to_string(s.matrix.rows()));
}

struct ProbeScores {
    Matrix centered_test;
    Matrix residual;
};

ProbeScores score_probe(const RepresentationSnapshot& val, const RepresentationSnapshot& test, const Matrix& design_val,
                        const Matrix& design_test, const char* who) {
    check_pair(val, test, who);
    check_design(design_val, val, who);
    check_design(design_test, test, who);
    if (design_val.cols() != design_test.cols()) throw ContractViolation(std::string(who) + ": design widths differ");
    const ProbeFit probe = fit_probe(design_val, val.as_double());
    ProbeScores out;
    out.centered_test = test.as_double().rowwise() - probe.intercept.transpose();
    out.residual = test.as_double() - probe.predict(design_test);
    return out;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Matrix ProbeFit::predict(const Matrix& design) const {
    return ((design.rowwise() - design_mean.transpose()) * coefficients).rowwise() + intercept.transpose();
}

ProbeFit fit_probe(const Matrix& design_val, const Matrix& reps_val, std::string feature) {
    if (design_val.rows() != reps_val.rows()) throw ContractViolation("fit_probe: row counts differ");
    ProbeFit p;
    p.feature = std::move(feature);
    p.design_mean = linalg::column_mean(design_val);
    p.intercept = linalg::column_mean(reps_val);
    const Matrix d = design_val.rowwise() - p.design_mean.transpose();
    const Matrix r = reps_val.rowwise() - p.intercept.transpose();
    p.coefficients = linalg::solve_least_squares(d, r);
    return p;
}

double total_variance(const RepresentationSnapshot& val, const RepresentationSnapshot& test) {
    check_pair(val, test, "total_variance");
    const Vector mu = linalg::column_mean(val.as_double());
    return (test.as_double().rowwise() - mu.transpose()).squaredNorm() / static_cast<double>(test.matrix.rows());
}

VarianceExplainedResult variance_explained(const RepresentationSnapshot& val, const RepresentationSnapshot& test,
                                           const Matrix& design_val, const Matrix& design_test,
                                           std::optional<double> final_total, std::string feature) {
    const auto s = score_probe(val, test, design_val, design_test, "variance_explained");
    const double n = static_cast<double>(test.matrix.rows());
    VarianceExplainedResult r;
    r.total_variance = s.centered_test.squaredNorm() / n;
    if (!(r.total_variance > 0.0)) throw UndefinedStatistic("variance_explained: test representations have zero variance");
    if (final_total && !(*final_total > 0.0))
        throw ContractViolation("variance_explained: final total variance must be positive");
    const double residual = s.residual.squaredNorm() / n;
    r.explained_variance = r.total_variance - residual;
    r.r2_raw = r.explained_variance / r.total_variance;
    r.r2_final_normalized = r.explained_variance / final_total.value_or(r.total_variance);
    r.step = test.step;
    r.layer = test.layer;
    r.feature = std::move(feature);
    return r;
}

VarianceExplainedResult variance_explained_patterns(const FeatureSpec& spec, const RepresentationSnapshot& val,
                                                    const RepresentationSnapshot& test, const Matrix& inputs_val,
                                                    const Matrix& inputs_test, std::optional<double> final_total) {
    const std::string id = (spec.name.empty() ? to_string(spec.kind) : spec.name) + ":patterns";
    return variance_explained(val, test, enumerate_patterns(spec, inputs_val), enumerate_patterns(spec, inputs_test),
                              final_total, id);
}

PerUnitResult per_unit_variance(const RepresentationSnapshot& val, const RepresentationSnapshot& test,
                                const Matrix& design_val, const Matrix& design_test) {
    const auto s = score_probe(val, test, design_val, design_test, "per_unit_variance");
    const double n = static_cast<double>(test.matrix.rows());
    PerUnitResult out;
    double explained = 0.0, total = 0.0;
    for (Eigen::Index j = 0; j < s.centered_test.cols(); ++j) {
        const double tot = s.centered_test.col(j).squaredNorm() / n;
        const double res = s.residual.col(j).squaredNorm() / n;
        out.total_variance.push_back(tot);
        if (tot > 0.0) {
            out.r2.emplace_back(1.0 - res / tot);
            explained += tot - res;
            total += tot;
        } else {
            out.r2.emplace_back(std::nullopt);
        }
    }
    if (!(total > 0.0)) throw UndefinedStatistic("per_unit_variance: every unit has zero test variance");
    out.aggregate = explained / total;
    return out;
}

Matrix feature_column(const Matrix& labels, std::size_t f) {
    if (f >= static_cast<std::size_t>(labels.cols())) throw ContractViolation("feature_column: index out of range");
    return labels.col(static_cast<Eigen::Index>(f));
}

std::vector<TrajectoryPoint> variance_trajectory(const RunRecord& rec, const BoolDataset& data, bool with_patterns) {
    const std::string layer = penultimate_layer(rec.config.mlp);
    const double final_total = total_variance(rec.final_snapshot("validation"), rec.final_snapshot("test"));
    const auto& features = rec.config.dataset.features;
    std::vector<TrajectoryPoint> out;
    for (auto step : rec.snapshot_steps()) {
        const auto* val = rec.find_snapshot(step, layer, "validation");
        const auto* test = rec.find_snapshot(step, layer, "test");
        if (!val || !test) continue;
        for (std::size_t f = 0; f < features.size(); ++f) {
            TrajectoryPoint p;
            p.step = step;
            p.feature = f;
            p.pattern_r2_raw = std::numeric_limits<double>::quiet_NaN();
            try {
                const auto r = variance_explained(*val, *test, feature_column(data.validation.labels, f),
                                                  feature_column(data.test.labels, f), final_total);
                p.r2_raw = r.r2_raw;
                p.r2_final_normalized = r.r2_final_normalized;
                if (with_patterns && features[f].arity() <= kMaxPatternArity)
                    p.pattern_r2_raw = variance_explained_patterns(features[f], *val, *test, data.validation.inputs,
                                                                   data.test.inputs, final_total)
                                           .r2_raw;
            } catch (const UndefinedStatistic&) {
                p.r2_raw = p.r2_final_normalized = std::numeric_limits<double>::quiet_NaN();
            }
            out.push_back(p);
        }
    }
    return out;
}

Standardized standardize(const Matrix& reference, const Matrix& reps) {
    if (reference.cols() != reps.cols()) throw ContractViolation("standardize: unit counts differ");
    const Vector mu = linalg::column_mean(reference);
    Standardized out;
    for (Eigen::Index j = 0; j < reference.cols(); ++j) {
        const double var = (reference.col(j).array() - mu(j)).square().mean();
        if (var > 1e-12) out.kept_units.push_back(static_cast<std::size_t>(j));
    }
    out.reps.resize(reps.rows(), static_cast<Eigen::Index>(out.kept_units.size()));
    for (std::size_t c = 0; c < out.kept_units.size(); ++c) {
        const auto j = static_cast<Eigen::Index>(out.kept_units[c]);
        const double sd = std::sqrt((reference.col(j).array() - mu(j)).square().mean());
        out.reps.col(static_cast<Eigen::Index>(c)) = (reps.col(j).array() - mu(j)) / sd;
    }
    return out;
}

double sparsity_from_weights(std::span<const double> w) {
    if (w.size() < 2) throw ContractViolation("sparsity_from_weights: need at least two weights");
    double top = 0.0;
    for (double x : w) top = std::max(top, std::abs(x));
    double z = 0.0;
    for (double x : w) z += std::exp(std::abs(x) - top);
    double entropy = 0.0;
    for (double x : w) {
        const double p = std::exp(std::abs(x) - top) / z;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    const double h_max = std::log(static_cast<double>(w.size()));
    return std::max(0.0, (h_max - entropy) / h_max);
}

LogisticFit fit_logistic(const Matrix& x, std::span<const double> labels, double ridge, double tolerance,
                         int max_iterations) {
    const Eigen::Index n = x.rows(), p = x.cols();
    if (static_cast<std::size_t>(n) != labels.size()) throw ContractViolation("fit_logistic: label count mismatch");
    if (n == 0 || p == 0) throw ContractViolation("fit_logistic: empty data");
    Eigen::Map<const Vector> y(labels.data(), n);
    Eigen::MatrixXd xa(n, p + 1);
    xa.leftCols(p) = x;
    xa.col(p).setOnes();
    Vector theta = Vector::Zero(p + 1);
    Vector penalty = Vector::Constant(p + 1, ridge);
    penalty(p) = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    auto objective = [&](const Vector& t) {
        const Vector z = xa * t;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) loss += softplus(z(i)) - y(i) * z(i);
        return loss * inv_n + 0.5 * (penalty.array() * t.array().square()).sum();
    };

    LogisticFit fit;
    double current = objective(theta);
    for (fit.iterations = 0; fit.iterations < max_iterations; ++fit.iterations) {
        const Vector z = xa * theta;
        Vector prob(n), weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = sigmoid(z(i));
            weight(i) = prob(i) * (1.0 - prob(i));
        }
        const Vector grad = xa.transpose() * (prob - y) * inv_n + penalty.cwiseProduct(theta);
        fit.gradient_norm = grad.norm();
        if (fit.gradient_norm < tolerance) break;
        Eigen::MatrixXd hess = xa.transpose() * weight.asDiagonal() * xa * inv_n;
        hess.diagonal() += penalty + Vector::Constant(p + 1, 1e-12);
        const Vector step = hess.ldlt().solve(grad);
        double t = 1.0;
        Vector candidate = theta - step;
        double value = objective(candidate);
        while (value > current - 1e-4 * t * grad.dot(step) && t > 1e-10) {
            t *= 0.5;
            candidate = theta - t * step;
            value = objective(candidate);
        }
        if (!std::isfinite(value)) throw NumericError("fit_logistic: objective became non-finite");
        theta = candidate;
        current = value;
    }
    fit.weights = theta.head(p);
    fit.intercept = theta(p);
    return fit;
}

double sparsity_score(const Matrix& reps, std::span<const double> labels) {
    const auto n_pos = std::count_if(labels.begin(), labels.end(), [](double v) { return v > 0.5; });
    if (n_pos == 0 || static_cast<std::size_t>(n_pos) == labels.size())
        throw UndefinedStatistic("sparsity_score: feature is constant");
    const auto fit = fit_logistic(reps, labels);
    return sparsity_from_weights(linalg::as_span(fit.weights));
}

std::size_t layer_index(const std::string& layer) {
    const std::string prefix = "hidden";
    if (layer.rfind(prefix, 0) != 0 || layer.size() == prefix.size())
        throw ContractViolation("layer name '" + layer + "' is not of the form hiddenN");
    std::size_t pos = 0;
    const auto idx = std::stoul(layer.substr(prefix.size()), &pos);
    if (pos != layer.size() - prefix.size()) throw ContractViolation("layer name '" + layer + "' is not of the form hiddenN");
    return idx;
}

std::string to_string(PcaMode mode) { return mode == PcaMode::KeepTop ? "keep_top" : "drop_top"; }

namespace {

Matrix resume_logits(const MlpF& model, std::size_t layer, const Matrix& acts) {
    return forward_from_layer(model, layer, MatrixF(acts.cast<float>())).cast<double>();
}

}  // namespace

std::vector<double> pca_readout(const MlpF& model, const RepresentationSnapshot& snapshot, const Matrix& labels,
                                std::size_t k, PcaMode mode) {
    const std::size_t layer = layer_index(snapshot.layer);
    if (layer >= model.n_hidden()) throw ContractViolation("pca_readout: snapshot layer beyond the model");
    const Matrix x = snapshot.as_double();
    const auto units = static_cast<std::size_t>(x.cols());
    if (k > units) throw ContractViolation("pca_readout: k exceeds the unit count");
    if (labels.rows() != x.rows()) throw ContractViolation("pca_readout: label rows do not match the snapshot");
    Matrix projected;
    if (k == 0) {
        const Vector mu = linalg::column_mean(x);
        projected = mode == PcaMode::KeepTop ? Matrix(x.rows(), x.cols()) : x;
        if (mode == PcaMode::KeepTop) projected.rowwise() = mu.transpose();
    } else {
        const auto pca = linalg::principal_components(x, std::min<std::size_t>(k, std::min<std::size_t>(units, x.rows())));
        const Matrix kept = pca.reconstruct(x);
        projected = mode == PcaMode::KeepTop ? kept : Matrix(x - (kept.rowwise() - pca.mean.transpose()));
    }
    const MatrixF logits = forward_from_layer(model, layer, MatrixF(projected.cast<float>()));
    return binary_accuracy(logits, MatrixF(labels.cast<float>()));
}

SteeringVector steering_vector(const ProbeFit& probe) {
    if (probe.coefficients.rows() != 1)
        throw ContractViolation("steering_vector: probe must be fit on a single binary feature");
    SteeringVector s;
    s.direction = probe.coefficients.row(0).transpose();
    s.magnitude = s.direction.norm();
    return s;
}

Matrix steer(const MlpF& model, std::size_t layer, const Matrix& acts, const Vector& d, double alpha,
             std::size_t feature) {
    if (d.size() != acts.cols()) throw ContractViolation("steer: direction width does not match the activations");
    if (feature >= model.config().output_dim) throw ContractViolation("steer: feature index out of range");
    const Matrix logits = resume_logits(model, layer, acts);
    Matrix out = acts;
    for (Eigen::Index i = 0; i < acts.rows(); ++i) {
        const double sign = logits(i, static_cast<Eigen::Index>(feature)) > 0 ? -1.0 : 1.0;
        out.row(i) += sign * alpha * d.transpose();
    }
    return out;
}

InterventionResult intervene(const MlpF& model, const RepresentationSnapshot& snapshot, const Vector& d, double alpha,
                             std::size_t feature) {
    const std::size_t layer = layer_index(snapshot.layer);
    const Matrix acts = snapshot.as_double();
    const Matrix before = resume_logits(model, layer, acts);
    const Matrix after = resume_logits(model, layer, steer(model, layer, acts, d, alpha, feature));
    InterventionResult r;
    r.alpha = alpha;
    r.magnitude = std::abs(alpha) * d.norm();
    for (Eigen::Index f = 0; f < before.cols(); ++f) {
        std::size_t flips = 0;
        for (Eigen::Index i = 0; i < before.rows(); ++i) flips += (before(i, f) > 0) != (after(i, f) > 0);
        r.flip_fraction.push_back(static_cast<double>(flips) / static_cast<double>(before.rows()));
    }
    return r;
}

std::string to_string(RdmMetric metric) { return metric == RdmMetric::Cosine ? "cosine" : "euclidean"; }
std::string to_string(Correlation corr) { return corr == Correlation::Spearman ? "spearman" : "pearson"; }

Rdm rdm(const RepresentationSnapshot& snapshot, RdmMetric metric) {
    const Matrix x = snapshot.as_double();
    const Eigen::Index n = x.rows();
    Rdm out;
    out.metric = metric;
    out.stimulus_ids = snapshot.stimulus_ids;
    out.distances = Matrix::Zero(n, n);
    Vector norms(n);
    for (Eigen::Index i = 0; i < n; ++i) norms(i) = x.row(i).norm();
    if (metric == RdmMetric::Cosine && (norms.array() == 0.0).any())
        throw UndefinedStatistic("rdm: cosine distance undefined for an all-zero representation");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d;
            if (metric == RdmMetric::Euclidean)
                d = (x.row(i) - x.row(j)).norm();
            else
                d = std::max(0.0, 1.0 - x.row(i).dot(x.row(j)) / (norms(i) * norms(j)));
            out.distances(i, j) = out.distances(j, i) = d;
        }
    }
    return out;
}

double rsa_compare(const Rdm& a, const Rdm& b, Correlation corr) {
    if (a.stimulus_ids != b.stimulus_ids) throw ContractViolation("rsa_compare: stimulus ids differ");
    const Eigen::Index n = a.distances.rows();
    std::vector<double> ua, ub;
    ua.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    ub.reserve(ua.capacity());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            ua.push_back(a.distances(i, j));
            ub.push_back(b.distances(i, j));
        }
    return corr == Correlation::Pearson ? linalg::pearson(ua, ub) : linalg::spearman(ua, ub);
}

std::string to_string(DownstreamClassifier kind) { return kind == DownstreamClassifier::Linear ? "linear" : "mlp_1hidden"; }

double downstream_bias(const Matrix& joint_reps, std::span<const double> joint_target, const Matrix& conflict_reps,
                       std::span<const double> conflict_easy, DownstreamClassifier kind,
                       const DownstreamOptions& options) {
    if (static_cast<std::size_t>(joint_reps.rows()) != joint_target.size() ||
        static_cast<std::size_t>(conflict_reps.rows()) != conflict_easy.size() || joint_reps.cols() != conflict_reps.cols())
        throw ContractViolation("downstream_bias: shape mismatch");
    const Eigen::Index p = joint_reps.cols();
    Eigen::Map<const Vector> y(joint_target.data(), static_cast<Eigen::Index>(joint_target.size()));
    Optimizer<double> opt(OptimizerSpec::defaults(OptimizerKind::Adam, options.learning_rate));
    Vector conflict_logits;

    if (kind == DownstreamClassifier::Linear) {
        Vector w = Vector::Zero(p);
        double b = 0.0;
        const double inv_n = 1.0 / static_cast<double>(joint_reps.rows());
        for (std::size_t s = 0; s < options.steps; ++s) {
            Vector err = (joint_reps * w).array() + b;
            for (Eigen::Index i = 0; i < err.size(); ++i) err(i) = sigmoid(err(i)) - y(i);
            Vector gw = joint_reps.transpose() * err * inv_n;
            double gb = err.sum() * inv_n;
            std::vector<std::span<double>> params{{w.data(), static_cast<std::size_t>(p)}, {&b, 1}};
            std::vector<std::span<const double>> grads{{gw.data(), static_cast<std::size_t>(p)}, {&gb, 1}};
            opt.step(params, grads);
        }
        conflict_logits = (conflict_reps * w).array() + b;
    } else {
        MlpConfig cfg;
        cfg.input_dim = static_cast<std::size_t>(p);
        cfg.hidden_sizes = {options.hidden_width};
        cfg.output_dim = 1;
        cfg.seed = options.seed;
        auto model = MlpD::init(cfg);
        const Matrix target = y;
        const std::vector<double> mask{1.0};
        for (std::size_t s = 0; s < options.steps; ++s) {
            auto lg = loss_and_grads(model, joint_reps, target, mask);
            opt.step(model.parameter_views(), lg.gradient_views());
        }
        conflict_logits = forward(model, conflict_reps).logits.col(0);
    }
    if (!conflict_logits.allFinite()) throw NumericError("downstream_bias: classifier diverged");
    std::size_t agree = 0;
    for (Eigen::Index i = 0; i < conflict_logits.size(); ++i)
        agree += (conflict_logits(i) > 0) == (conflict_easy[static_cast<std::size_t>(i)] > 0.5);
    return static_cast<double>(agree) / static_cast<double>(conflict_logits.size());
}

double linear_probe_accuracy(const Matrix& reps_val, const Matrix& labels_val, const Matrix& reps_test,
                             const Matrix& labels_test, std::size_t f) {
    const Matrix yv = feature_column(labels_val, f);
    const Vector mu = linalg::column_mean(reps_val);
    const double ybar = yv.mean();
    const Matrix w = linalg::solve_least_squares(reps_val.rowwise() - mu.transpose(), yv.array() - ybar);
    const Matrix pred = ((reps_test.rowwise() - mu.transpose()) * w).array() + ybar;
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
        correct += (pred(i, 0) > 0.5) == (labels_test(i, static_cast<Eigen::Index>(f)) > 0.5);
    return static_cast<double>(correct) / static_cast<double>(pred.rows());
}

std::string pca_projection_csv(const RepresentationSnapshot& snapshot, const Matrix& labels,
                               const std::vector<std::string>& names) {
    if (labels.rows() != snapshot.matrix.rows() || static_cast<std::size_t>(labels.cols()) != names.size())
        throw ContractViolation("pca_projection_csv: labels do not match the snapshot or names");
    const Matrix x = snapshot.as_double();
    const auto pca = linalg::principal_components(x, 2);
    const Matrix scores = pca.project(x);
    std::ostringstream out;
    out.precision(9);
    out << "stimulus_id,pc1,pc2";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out << snapshot.stimulus_ids[static_cast<std::size_t>(i)] << ',' << scores(i, 0) << ',' << scores(i, 1);
        for (Eigen::Index f = 0; f < labels.cols(); ++f) out << ',' << labels(i, f);
        out << '\n';
    }
    return out.str();
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out.precision(9);
    out << "run,step,layer,feature,analysis,value\n";
    for (const auto& r : rows)
        out << r.run << ',' << r.step << ',' << r.layer << ',' << r.feature << ',' << r.analysis << ',' << r.value << '\n';
    return out.str();
}

}  // namespace rblab
