#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rblab/analysis.hpp"
#include "rblab/errors.hpp"

using namespace rblab;

namespace {

RepresentationSnapshot snap(const Matrix& m, const std::string& split, const std::string& layer = "hidden0") {
    RepresentationSnapshot s;
    s.run_id = "t";
    s.layer = layer;
    s.split = split;
    s.matrix = m.cast<float>();
    for (Eigen::Index i = 0; i < m.rows(); ++i) s.stimulus_ids.push_back(static_cast<std::uint64_t>(i));
    return s;
}

struct Sample {
    Matrix bits;  // n x k uniform bits
    Matrix reps;
};

// reps = 1-unit: bit0 + noise with variance `noise_var`.
Sample noisy_linear(std::size_t n, double noise_var, std::uint64_t seed) {
    Rng rng(seed);
    Sample s{Matrix(n, 2), Matrix(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        s.bits(r, 0) = rng.bit();
        s.bits(r, 1) = rng.bit();
        s.reps(r, 0) = s.bits(r, 0) + std::sqrt(noise_var) * rng.normal();
    }
    return s;
}

// Out-of-sample R² of a scalar regression, written out with plain loops.
double scalar_r2(const Matrix& xv, const Matrix& yv, const Matrix& xt, const Matrix& yt) {
    const auto n = static_cast<double>(xv.rows());
    double mx = 0, my = 0;
    for (Eigen::Index i = 0; i < xv.rows(); ++i) mx += xv(i, 0), my += yv(i, 0);
    mx /= n, my /= n;
    double sxy = 0, sxx = 0;
    for (Eigen::Index i = 0; i < xv.rows(); ++i) sxy += (xv(i, 0) - mx) * (yv(i, 0) - my), sxx += std::pow(xv(i, 0) - mx, 2);
    const double b = sxy / sxx;
    double res = 0, tot = 0;
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        res += std::pow(yt(i, 0) - (my + b * (xt(i, 0) - mx)), 2);
        tot += std::pow(yt(i, 0) - my, 2);
    }
    return 1.0 - res / tot;
}

MlpF small_model(std::uint64_t seed, std::size_t outputs = 2) {
    MlpConfig c;
    c.input_dim = 6;
    c.hidden_sizes = {8, 8};
    c.output_dim = outputs;
    c.seed = seed;
    return MlpF::init(c);
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

TEST(VarianceExplained, HalfSignalHalfNoise) {
    // Var(bit) = 1/4 and noise variance 1/4, so the closed form is 1/2.
    const auto val = noisy_linear(10000, 0.25, 1), test = noisy_linear(10000, 0.25, 2);
    const auto r = variance_explained(snap(val.reps, "validation"), snap(test.reps, "test"), feature_column(val.bits, 0),
                                      feature_column(test.bits, 0));
    EXPECT_NEAR(r.r2_raw, 0.5, 0.03);
    EXPECT_NEAR(r.r2_raw, scalar_r2(val.bits, val.reps, test.bits, test.reps), 1e-6);
    EXPECT_NEAR(r.r2_final_normalized, r.r2_raw, 1e-12);
}

TEST(VarianceExplained, IndependentFeatureNearZero) {
    const auto val = noisy_linear(10000, 0.25, 3), test = noisy_linear(10000, 0.25, 4);
    const auto r = variance_explained(snap(val.reps, "validation"), snap(test.reps, "test"), feature_column(val.bits, 1),
                                      feature_column(test.bits, 1));
    EXPECT_LE(r.r2_raw, 0.02);
}

TEST(VarianceExplained, ExactCodeIsOne) {
    const auto val = noisy_linear(500, 0.0, 5), test = noisy_linear(500, 0.0, 6);
    Matrix rv(500, 3), rt(500, 3);
    rv << 3 * val.bits.col(0), -val.bits.col(0), Matrix::Constant(500, 1, 2.0);
    rt << 3 * test.bits.col(0), -test.bits.col(0), Matrix::Constant(500, 1, 2.0);
    const auto r = variance_explained(snap(rv, "validation"), snap(rt, "test"), feature_column(val.bits, 0),
                                      feature_column(test.bits, 0));
    EXPECT_NEAR(r.r2_raw, 1.0, 1e-6);
}

TEST(VarianceExplained, FinalNormalizationDividesByGivenTotal) {
    const auto val = noisy_linear(2000, 0.25, 7), test = noisy_linear(2000, 0.25, 8);
    const auto a = variance_explained(snap(val.reps, "validation"), snap(test.reps, "test"), feature_column(val.bits, 0),
                                      feature_column(test.bits, 0));
    const auto b = variance_explained(snap(val.reps, "validation"), snap(test.reps, "test"), feature_column(val.bits, 0),
                                      feature_column(test.bits, 0), 4 * a.total_variance);
    EXPECT_NEAR(b.r2_final_normalized, a.r2_raw / 4, 1e-12);
    EXPECT_NEAR(b.r2_raw, a.r2_raw, 1e-12);
}

TEST(VarianceExplained, ConstantRepsUndefined) {
    const auto val = noisy_linear(100, 0.0, 9);
    const Matrix zeros = Matrix::Zero(100, 2);
    EXPECT_THROW(variance_explained(snap(zeros, "validation"), snap(zeros, "test"), feature_column(val.bits, 0),
                                    feature_column(val.bits, 0)),
                 UndefinedStatistic);
}

TEST(VarianceExplained, MismatchedCapturesRejected) {
    const auto val = noisy_linear(100, 0.1, 9);
    EXPECT_THROW(variance_explained(snap(val.reps, "validation"), snap(val.reps, "test", "hidden1"),
                                    feature_column(val.bits, 0), feature_column(val.bits, 0)),
                 ContractViolation);
}

TEST(VarianceExplained, AndFeatureVersusPatterns) {
    // Rep is the 2-bit pattern code 0..3. AND is code==3; the conditional means
    // are 1 and 3, so explained variance is 3/4 * 1/4 * 4 = 0.75 of 1.25.
    FeatureSpec spec;
    spec.kind = FeatureKind::And;
    spec.input_indices = {0, 1};
    auto make = [&](std::uint64_t seed) {
        Rng rng(seed);
        Matrix x(8000, 2), r(8000, 1);
        for (Eigen::Index i = 0; i < 8000; ++i) {
            x(i, 0) = rng.bit();
            x(i, 1) = rng.bit();
            r(i, 0) = 2 * x(i, 0) + x(i, 1);
        }
        return std::pair{x, r};
    };
    const auto [xv, rv] = make(1);
    const auto [xt, rt] = make(2);
    const auto and_v = label_matrix({spec}, xv), and_t = label_matrix({spec}, xt);
    const auto feat = variance_explained(snap(rv, "validation"), snap(rt, "test"), and_v, and_t);
    EXPECT_NEAR(feat.r2_raw, 0.6, 0.03);
    const auto pat = variance_explained_patterns(spec, snap(rv, "validation"), snap(rt, "test"), xv, xt);
    EXPECT_NEAR(pat.r2_raw, 1.0, 1e-6);
}

TEST(PerUnit, AggregateEqualsJointFit) {
    Rng rng(3);
    const Matrix bits_v = gaussian(600, 2, rng).unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    const Matrix bits_t = gaussian(600, 2, rng).unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    const Matrix mix = gaussian(2, 5, rng);
    const Matrix rv = bits_v * mix + 0.3 * gaussian(600, 5, rng);
    Matrix rt = bits_t * mix + 0.3 * gaussian(600, 5, rng);
    const auto joint = variance_explained(snap(rv, "validation"), snap(rt, "test"), bits_v, bits_t);
    const auto units = per_unit_variance(snap(rv, "validation"), snap(rt, "test"), bits_v, bits_t);
    EXPECT_NEAR(units.aggregate, joint.r2_raw, 1e-6);
    // A single unit reduces to the scalar regression.
    const auto one = per_unit_variance(snap(rv.col(0), "validation"), snap(rt.col(0), "test"), bits_v.col(0),
                                       bits_t.col(0));
    ASSERT_TRUE(one.r2[0].has_value());
    EXPECT_NEAR(*one.r2[0], scalar_r2(bits_v.col(0), rv.col(0), bits_t.col(0), rt.col(0)), 1e-5);
}

TEST(PerUnit, DeadUnitHasNoValue) {
    const auto val = noisy_linear(200, 0.1, 1), test = noisy_linear(200, 0.1, 2);
    Matrix rv(200, 2), rt(200, 2);
    rv << val.reps, Matrix::Zero(200, 1);
    rt << test.reps, Matrix::Zero(200, 1);
    const auto u = per_unit_variance(snap(rv, "validation"), snap(rt, "test"), feature_column(val.bits, 0),
                                     feature_column(test.bits, 0));
    EXPECT_TRUE(u.r2[0].has_value());
    EXPECT_FALSE(u.r2[1].has_value());
}

TEST(Sparsity, KnownWeights) {
    // softmax(ln 3, 0) = (3/4, 1/4).
    const double h = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    const std::vector<double> w{std::log(3.0), 0.0};
    EXPECT_NEAR(sparsity_from_weights(w), (std::log(2.0) - h) / std::log(2.0), 1e-12);
    EXPECT_NEAR(sparsity_from_weights(w), 0.189, 5e-4);
    EXPECT_GT(sparsity_from_weights(std::vector<double>{50.0, 0.0}), 0.95);
    EXPECT_NEAR(sparsity_from_weights(std::vector<double>{-2.0, 2.0, 2.0}), 0.0, 1e-12);
    EXPECT_THROW(sparsity_from_weights(std::vector<double>{1.0}), ContractViolation);
}

TEST(Sparsity, LogisticStationaryPoint) {
    Rng rng(4);
    const Matrix x = gaussian(400, 3, rng);
    std::vector<double> y(400);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-(x(i, 0) - 0.5 * x(i, 2)))));
    const double ridge = 1e-2;
    const auto fit = fit_logistic(x, y, ridge);
    // Gradient of mean log loss + ridge/2 |w|^2, evaluated independently.
    Vector gw = ridge * fit.weights;
    double gb = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double z = x.row(i).dot(fit.weights) + fit.intercept;
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double e = (p - y[static_cast<std::size_t>(i)]) / 400.0;
        gw += e * x.row(i).transpose();
        gb += e;
    }
    EXPECT_LT(gw.norm(), 1e-5);
    EXPECT_LT(std::abs(gb), 1e-5);
    EXPECT_GT(fit.weights(0), 0.5);
}

TEST(Sparsity, SeparableDataStaysFinite) {
    Matrix x(4, 1);
    x << -2, -1, 1, 2;
    const std::vector<double> y{0, 0, 1, 1};
    const auto fit = fit_logistic(x, y);
    EXPECT_TRUE(std::isfinite(fit.weights(0)));
    EXPECT_GT(fit.weights(0), 1.0);
}

TEST(Sparsity, LocalizedCodeScoresHigher) {
    Rng rng(5);
    const std::size_t n = 2000;
    std::vector<double> y(n);
    Matrix local = gaussian(n, 8, rng), spread = gaussian(n, 8, rng);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.bit();
        const auto r = static_cast<Eigen::Index>(i);
        local(r, 0) += 3 * y[i];
        spread.row(r).array() += y[i];
    }
    const auto a = standardize(local, local), b = standardize(spread, spread);
    EXPECT_GT(sparsity_score(a.reps, y), sparsity_score(b.reps, y) + 0.2);
    EXPECT_THROW(sparsity_score(a.reps, std::vector<double>(n, 1.0)), UndefinedStatistic);
}

TEST(Sparsity, StandardizeDropsDeadUnits) {
    Matrix ref(3, 3), reps(2, 3);
    ref << 1, 5, 0, 2, 5, 1, 3, 5, 2;
    reps << 2, 7, 1, 4, 5, 3;
    const auto s = standardize(ref, reps);
    EXPECT_EQ(s.kept_units, (std::vector<std::size_t>{0, 2}));
    EXPECT_NEAR(s.reps(0, 0), 0.0, 1e-12);
    EXPECT_NEAR(s.reps(1, 0), 2.0 / std::sqrt(2.0 / 3.0), 1e-9);
}

TEST(Steering, DirectionFromBalancedProbe) {
    Matrix design(4, 1), reps(4, 2);
    design << 0, 0, 1, 1;
    reps << 0, 0, 0, 1, 2, 0, 2, 1;
    const auto d = steering_vector(fit_probe(design, reps));
    EXPECT_NEAR(d.direction(0), 2.0, 1e-12);
    EXPECT_NEAR(d.direction(1), 0.0, 1e-12);
    EXPECT_NEAR(d.magnitude, 2.0, 1e-12);
}

TEST(Steering, ZeroAlphaFlipsNothing) {
    const auto model = small_model(1);
    Rng rng(2);
    const auto s = snap(gaussian(100, 8, rng), "test", "hidden1");
    Vector d = Vector::Ones(8);
    const auto r = intervene(model, s, d, 0.0, 0);
    for (double f : r.flip_fraction) EXPECT_EQ(f, 0.0);
}

TEST(Steering, ShiftSignFollowsPrediction) {
    const auto model = small_model(3);
    Rng rng(4);
    const Matrix acts = gaussian(50, 8, rng);
    Vector d(8);
    for (Eigen::Index j = 0; j < 8; ++j) d(j) = rng.normal();
    const Matrix logits = forward_from_layer(model, 1, MatrixF(acts.cast<float>())).cast<double>();
    const Matrix up = steer(model, 1, acts, d, 0.7, 1);
    for (Eigen::Index i = 0; i < acts.rows(); ++i) {
        const double sign = logits(i, 1) > 0 ? -1.0 : 1.0;
        EXPECT_LT((up.row(i) - acts.row(i) - sign * 0.7 * d.transpose()).norm(), 1e-12);
    }
    // Large pushes flip everything on the steered feature.
    const auto r = intervene(model, snap(acts, "test", "hidden1"), 1000.0 * Vector::Ones(8), 1.0, 1);
    EXPECT_EQ(r.magnitude, 1000.0 * std::sqrt(8.0));
    EXPECT_THROW(steer(model, 1, acts, Vector::Ones(3), 1.0, 0), ContractViolation);
}

TEST(Pca, FullRankKeepAndZeroDropAreIdentity) {
    const auto model = small_model(5);
    Rng rng(6);
    const Matrix acts = gaussian(200, 8, rng);
    const auto s = snap(acts, "test", "hidden1");
    const Matrix logits = forward_from_layer(model, 1, s.matrix).cast<double>();
    const Matrix labels = logits.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    for (double a : pca_readout(model, s, labels, 8, PcaMode::KeepTop)) EXPECT_GE(a, 0.99);
    for (double a : pca_readout(model, s, labels, 0, PcaMode::DropTop)) EXPECT_EQ(a, 1.0);
    EXPECT_THROW(pca_readout(model, s, labels, 9, PcaMode::KeepTop), ContractViolation);
}

TEST(Pca, DroppingTheSignalDirectionRemovesIt) {
    // Unit 0 carries a large-variance copy of the label; everything else is small noise.
    MlpConfig c;
    c.input_dim = 2;
    c.hidden_sizes = {4};
    c.output_dim = 1;
    MlpF model(c);
    model.layers()[1].weight(0, 0) = 1.0f;
    Rng rng(7);
    Matrix acts = 0.01 * gaussian(400, 4, rng), labels(400, 1);
    for (Eigen::Index i = 0; i < 400; ++i) {
        labels(i, 0) = rng.bit();
        acts(i, 0) += labels(i, 0) > 0 ? 5.0 : -5.0;
    }
    const auto s = snap(acts, "test", "hidden0");
    EXPECT_GE(pca_readout(model, s, labels, 1, PcaMode::KeepTop)[0], 0.99);
    EXPECT_LE(pca_readout(model, s, labels, 1, PcaMode::DropTop)[0], 0.7);
}

TEST(Rsa, RdmInvariantToRotation) {
    Rng rng(8);
    const Matrix x = gaussian(30, 5, rng);
    const Matrix q = linalg::principal_components(gaussian(50, 5, rng), 5).components;
    const auto a = rdm(snap(x, "test"), RdmMetric::Euclidean);
    const auto b = rdm(snap(x * q, "test"), RdmMetric::Euclidean);
    EXPECT_LT((a.distances - b.distances).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_EQ(a.distances, a.distances.transpose());
    EXPECT_EQ(a.distances.diagonal(), Vector::Zero(30));
    const auto c = rdm(snap(x, "test"), RdmMetric::Cosine), d = rdm(snap(x * q, "test"), RdmMetric::Cosine);
    EXPECT_LT((c.distances - d.distances).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_NEAR(rsa_compare(a, b, Correlation::Pearson), 1.0, 1e-6);
    EXPECT_NEAR(rsa_compare(a, b, Correlation::Spearman), 1.0, 1e-6);
}

TEST(Rsa, IndependentRepresentationsUncorrelated) {
    Rng rng(9);
    const auto a = rdm(snap(gaussian(200, 10, rng), "test"), RdmMetric::Euclidean);
    const auto b = rdm(snap(gaussian(200, 10, rng), "test"), RdmMetric::Euclidean);
    EXPECT_LT(std::abs(rsa_compare(a, b, Correlation::Spearman)), 0.1);
}

TEST(Rsa, ErrorsReported) {
    Matrix x = Matrix::Ones(3, 2);
    x.row(1).setZero();
    EXPECT_THROW(rdm(snap(x, "test"), RdmMetric::Cosine), UndefinedStatistic);
    auto s = snap(Matrix::Ones(3, 2), "test");
    const auto a = rdm(s, RdmMetric::Euclidean);
    s.stimulus_ids = {0, 1, 5};
    EXPECT_THROW(rsa_compare(a, rdm(s, RdmMetric::Euclidean), Correlation::Pearson), ContractViolation);
}

TEST(Downstream, EasyOnlyTargetPrefersEasy) {
    Rng rng(10);
    auto make = [&](std::size_t n, bool conflict, std::vector<double>& target, std::vector<double>& easy) {
        Matrix reps = 0.1 * gaussian(static_cast<Eigen::Index>(n), 4, rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = rng.bit();
            const double h = conflict ? 1 - e : rng.bit();
            const auto r = static_cast<Eigen::Index>(i);
            reps(r, 0) += e;
            reps(r, 1) += h;
            target.push_back(e);
            easy.push_back(e);
        }
        return reps;
    };
    std::vector<double> jt, je, ct, ce;
    const Matrix joint = make(1000, false, jt, je);
    const Matrix conflict = make(300, true, ct, ce);
    for (auto kind : {DownstreamClassifier::Linear, DownstreamClassifier::Mlp1Hidden}) {
        DownstreamOptions o;
        o.learning_rate = 1e-2;
        EXPECT_GT(downstream_bias(joint, jt, conflict, ce, kind, o), 0.95) << to_string(kind);
    }
}

TEST(Misc, LayerIndexParsing) {
    EXPECT_EQ(layer_index("hidden12"), 12u);
    EXPECT_THROW(layer_index("output"), ContractViolation);
    EXPECT_THROW(layer_index("hidden3x"), ContractViolation);
}

TEST(Misc, LinearProbeAccuracyOnSeparableCode) {
    const auto val = noisy_linear(500, 0.01, 1), test = noisy_linear(500, 0.01, 2);
    EXPECT_GE(linear_probe_accuracy(val.reps, val.bits, test.reps, test.bits, 0), 0.99);
    EXPECT_LE(linear_probe_accuracy(val.reps, val.bits, test.reps, test.bits, 1), 0.6);
}

TEST(Misc, CsvOutputs) {
    const auto val = noisy_linear(5, 0.1, 1);
    Matrix reps(5, 2);
    reps << val.reps, val.bits.col(1);
    const auto csv = pca_projection_csv(snap(reps, "test"), val.bits, {"a", "b"});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "stimulus_id,pc1,pc2,a,b");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    const auto report = report_csv({{"r", 3, "hidden0", "easy", "r2", 0.5}});
    EXPECT_NE(report.find("r,3,hidden0,easy,r2,0.5"), std::string::npos);
}
