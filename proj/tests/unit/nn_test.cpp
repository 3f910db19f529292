#include <gtest/gtest.h>

#include <cmath>

#include "rblab/errors.hpp"
#include "rblab/nn.hpp"

using namespace rblab;

namespace {

struct Variant {
    Nonlinearity nl;
    bool residual;
    double dropout;
};

MlpConfig small_config(const Variant& v, std::uint64_t seed) {
    MlpConfig c;
    c.input_dim = 5;
    c.hidden_sizes = {6, 6, 4};
    c.output_dim = 3;
    c.nonlinearity = v.nl;
    c.residual = v.residual;
    c.dropout_rate = v.dropout;
    c.seed = seed;
    return c;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

Matrix random_bits(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.bit();
    return m;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<Variant> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
    const auto v = GetParam();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto model = MlpD::init(small_config(v, seed));
        Rng data_rng(derive_seed(seed, 1));
        const Matrix x = random_matrix(7, 5, data_rng);
        const Matrix y = random_bits(7, 3, data_rng);
        const std::vector<double> mask{1.0, 0.0, 0.5};
        const Mode mode = v.dropout > 0 ? Mode::Train : Mode::Eval;
        const auto dropout_seed = derive_seed(seed, 2);

        auto loss = [&](const MlpD& m) {
            Rng r(dropout_seed);
            return loss_and_grads(m, x, y, mask, mode, &r).total;
        };
        Rng r(dropout_seed);
        const auto analytic = loss_and_grads(model, x, y, mask, mode, &r);

        auto views = model.parameter_views();
        const auto grads = analytic.gradient_views();
        ASSERT_EQ(views.size(), grads.size());
        const double eps = 1e-4;
        for (std::size_t t = 0; t < views.size(); ++t) {
            for (std::size_t j = 0; j < views[t].size(); ++j) {
                const double saved = views[t][j];
                views[t][j] = saved + eps;
                const double up = loss(model);
                views[t][j] = saved - eps;
                const double down = loss(model);
                views[t][j] = saved;
                const double numeric = (up - down) / (2 * eps);
                ASSERT_NEAR(grads[t][j], numeric, 1e-6 + 1e-4 * std::abs(numeric))
                    << "tensor " << t << " entry " << j << " seed " << seed;
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Variants, GradientCheck,
                         ::testing::Values(Variant{Nonlinearity::LeakyRelu, false, 0.0},
                                           Variant{Nonlinearity::Tanh, false, 0.0},
                                           Variant{Nonlinearity::LeakyRelu, true, 0.0},
                                           Variant{Nonlinearity::Tanh, true, 0.3}));

TEST(Init, WeightVarianceMatchesFanIn) {
    MlpConfig c;
    c.input_dim = 400;
    c.hidden_sizes = {300};
    c.output_dim = 2;
    c.init_scale = 2.0;
    const auto m = MlpD::init(c);
    const auto& w = m.layers()[0].weight;
    const double n = static_cast<double>(w.size());
    const double mean = w.mean();
    const double var = (w.array() - mean).square().sum() / n;
    EXPECT_NEAR(mean, 0.0, 5 * std::sqrt(2.0 / 400 / n));
    EXPECT_NEAR(var / (2.0 / 400), 1.0, 0.03);
    // Truncation at two standard deviations of the underlying normal.
    EXPECT_LE(w.cwiseAbs().maxCoeff(), 2.0 * std::sqrt(2.0 / 400) / 0.8796 + 1e-12);
    EXPECT_TRUE(m.layers()[0].bias.isZero());
}

TEST(Init, DeterministicPerSeed) {
    MlpConfig c;
    c.seed = 4;
    const auto a = MlpF::init(c), b = MlpF::init(c);
    for (std::size_t l = 0; l < a.layers().size(); ++l) EXPECT_EQ(a.layers()[l].weight, b.layers()[l].weight);
    c.seed = 5;
    EXPECT_NE(MlpF::init(c).layers()[0].weight, a.layers()[0].weight);
}

TEST(Forward, FromLayerMatchesFullPass) {
    for (bool residual : {false, true}) {
        MlpConfig c;
        c.input_dim = 8;
        c.hidden_sizes = {16, 16, 8};
        c.output_dim = 2;
        c.residual = residual;
        c.seed = 3;
        const auto m = MlpD::init(c);
        Rng rng(1);
        const Matrix x = random_matrix(10, 8, rng);
        const auto trace = forward(m, x);
        for (std::size_t l = 0; l < m.n_hidden(); ++l)
            EXPECT_LT((forward_from_layer(m, l, trace.activations[l]) - trace.logits).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Forward, SkipOnlyBetweenEqualWidths) {
    MlpConfig c;
    c.hidden_sizes = {16, 16, 8, 8};
    c.residual = true;
    const MlpD m(c);
    EXPECT_FALSE(m.has_skip(0));
    EXPECT_TRUE(m.has_skip(1));
    EXPECT_FALSE(m.has_skip(2));
    EXPECT_TRUE(m.has_skip(3));
}

TEST(Forward, DropoutMaskScalesSurvivors) {
    MlpConfig c;
    c.input_dim = 4;
    c.hidden_sizes = {2000};
    c.output_dim = 1;
    c.dropout_rate = 0.25;
    const auto m = MlpD::init(c);
    Rng rng(0);
    const Matrix x = Matrix::Ones(3, 4);
    const auto trace = forward(m, x, Mode::Train, &rng);
    const auto& mask = trace.dropout_masks.at(0);
    const double keep = (mask.array() > 0).template cast<double>().mean();
    EXPECT_NEAR(keep, 0.75, 0.02);
    for (Eigen::Index i = 0; i < mask.size(); ++i)
        ASSERT_TRUE(mask(i) == 0.0 || std::abs(mask(i) - 1.0 / 0.75) < 1e-12);
    EXPECT_THROW(forward(m, x, Mode::Train, nullptr), ContractViolation);
}

TEST(Loss, CrossEntropyAndAccuracyByHand) {
    Matrix logits(2, 1), labels(2, 1);
    logits << 0.0, 2.0;
    labels << 1.0, 0.0;
    const auto ce = sigmoid_cross_entropy(logits, labels);
    EXPECT_NEAR(ce[0], (std::log(2.0) + std::log1p(std::exp(2.0))) / 2, 1e-12);
    EXPECT_DOUBLE_EQ(binary_accuracy(logits, labels)[0], 0.0);
    // Large logits stay finite.
    logits << -800.0, 800.0;
    EXPECT_NEAR(sigmoid_cross_entropy(logits, labels)[0], 800.0, 1e-9);
}

TEST(Loss, MaskedFeatureGetsNoGradient) {
    MlpConfig c;
    c.input_dim = 4;
    c.hidden_sizes = {5};
    c.output_dim = 2;
    const auto m = MlpD::init(c);
    Rng rng(2);
    const Matrix x = random_matrix(6, 4, rng), y = random_bits(6, 2, rng);
    const std::vector<double> mask{1.0, 0.0};
    const auto g = loss_and_grads(m, x, y, mask);
    EXPECT_TRUE(g.grads.back().weight.col(1).isZero());
    EXPECT_EQ(g.grads.back().bias(1), 0.0);
    EXPECT_GT(g.feature_losses[1], 0.0);
    EXPECT_DOUBLE_EQ(g.total, g.feature_losses[0]);
}

TEST(Config, Validation) {
    MlpConfig c;
    c.dropout_rate = 1.0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c.dropout_rate = 0.0;
    c.hidden_sizes = {0};
    EXPECT_THROW(c.validate(), ContractViolation);
    EXPECT_EQ(nonlinearity_from_string(to_string(Nonlinearity::Tanh)), Nonlinearity::Tanh);
}
