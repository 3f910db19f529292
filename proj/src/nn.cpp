#include "rblab/nn.hpp"

#include <cmath>

#include "rblab/errors.hpp"

namespace rblab {

std::string to_string(Nonlinearity n) { return n == Nonlinearity::Tanh ? "tanh" : "leaky_relu"; }

Nonlinearity nonlinearity_from_string(const std::string& name) {
    if (name == "leaky_relu") return Nonlinearity::LeakyRelu;
    if (name == "tanh") return Nonlinearity::Tanh;
    throw ContractViolation("unknown nonlinearity '" + name + "'");
}

void MlpConfig::validate() const {
    if (input_dim == 0 || output_dim == 0) throw ContractViolation("mlp: input and output widths must be positive");
    if (hidden_sizes.empty()) throw ContractViolation("mlp: hidden_sizes must be nonempty");
    for (auto h : hidden_sizes)
        if (h == 0) throw ContractViolation("mlp: hidden widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ContractViolation("mlp: dropout_rate must lie in [0, 1)");
    if (!(init_scale > 0.0)) throw ContractViolation("mlp: init_scale must be positive");
}

template <class T>
Mlp<T>::Mlp(MlpConfig config) : config_(std::move(config)) {
    config_.validate();
    std::size_t fan_in = config_.input_dim;
    auto add = [&](std::size_t fan_out) {
        DenseLayer<T> layer;
        layer.weight = MatrixT<T>::Zero(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
        layer.bias = RowVectorT<T>::Zero(static_cast<Eigen::Index>(fan_out));
        layers_.push_back(std::move(layer));
        fan_in = fan_out;
    };
    for (auto h : config_.hidden_sizes) add(h);
    add(config_.output_dim);
}

template <class T>
Mlp<T> Mlp<T>::init(const MlpConfig& config) {
    // A standard normal truncated at +-2 has standard deviation 0.8796...; dividing
    // by it restores the target variance.
    constexpr double kTruncatedStd = 0.87962566103423978;
    Mlp<T> model(config);
    Rng rng(config.seed);
    for (auto& layer : model.layers_) {
        const double fan_in = static_cast<double>(layer.weight.rows());
        const double std = std::sqrt(config.init_scale / fan_in) / kTruncatedStd;
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
                layer.weight(i, j) = static_cast<T>(std * rng.truncated_normal(2.0));
    }
    return model;
}

template <class T>
bool Mlp<T>::has_skip(std::size_t l) const {
    const std::size_t in = l == 0 ? config_.input_dim : config_.hidden_sizes.at(l - 1);
    return config_.residual && in == config_.hidden_sizes.at(l);
}

template <class T>
std::size_t Mlp<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

template <class T>
std::vector<std::span<T>> Mlp<T>::parameter_views() {
    std::vector<std::span<T>> views;
    for (auto& l : layers_) {
        views.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        views.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return views;
}

template <class T>
bool Mlp<T>::all_finite() const {
    for (const auto& l : layers_)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

template <class T>
std::vector<std::span<const T>> LossAndGrads<T>::gradient_views() const {
    std::vector<std::span<const T>> views;
    for (const auto& l : grads) {
        views.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
        views.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return views;
}

namespace {

template <class T>
void apply_nonlinearity(Nonlinearity n, const MatrixT<T>& z, MatrixT<T>& out) {
    if (n == Nonlinearity::Tanh) {
        out = z.array().tanh().matrix();
    } else {
        const T slope = static_cast<T>(kLeakySlope);
        out = z.array().max(z.array() * slope).matrix();
    }
}

// Elementwise derivative of the nonlinearity at z.
template <class T>
MatrixT<T> nonlinearity_grad(Nonlinearity n, const MatrixT<T>& z) {
    if (n == Nonlinearity::Tanh) {
        return (T(1) - z.array().tanh().square()).matrix();
    }
    const T slope = static_cast<T>(kLeakySlope);
    return (z.array() > T(0)).select(MatrixT<T>::Constant(z.rows(), z.cols(), T(1)),
                                     MatrixT<T>::Constant(z.rows(), z.cols(), slope));
}

// Affine map followed by the nonlinearity, identity skip, and dropout for one hidden layer.
template <class T>
void hidden_layer(const Mlp<T>& model, std::size_t l, const MatrixT<T>& x, Mode mode, Rng* rng, MatrixT<T>& pre,
                  MatrixT<T>& out, MatrixT<T>* mask) {
    const auto& layer = model.layers()[l];
    pre.noalias() = x * layer.weight;
    pre.rowwise() += layer.bias;
    apply_nonlinearity(model.config().nonlinearity, pre, out);
    const double rate = model.config().dropout_rate;
    if (mode == Mode::Train && rate > 0.0) {
        if (rng == nullptr) throw ContractViolation("forward: TRAIN mode with dropout needs an rng");
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
        mask->resize(out.rows(), out.cols());
        for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = rng->uniform() < rate ? T(0) : keep_scale;
        out.array() *= mask->array();
    }
    if (model.has_skip(l)) out += x;
}

template <class T>
void check_input(const Mlp<T>& model, const MatrixT<T>& inputs) {
    if (static_cast<std::size_t>(inputs.cols()) != model.config().input_dim)
        throw ContractViolation("forward: input width " + std::to_string(inputs.cols()) + " != " +
                                std::to_string(model.config().input_dim));
}

}  // namespace

template <class T>
ForwardTrace<T> forward(const Mlp<T>& model, const MatrixT<T>& inputs, Mode mode, Rng* rng) {
    check_input(model, inputs);
    const std::size_t H = model.n_hidden();
    const bool dropout = mode == Mode::Train && model.config().dropout_rate > 0.0;
    ForwardTrace<T> trace;
    trace.pre_activations.resize(H);
    trace.activations.resize(H);
    if (dropout) trace.dropout_masks.resize(H);
    for (std::size_t l = 0; l < H; ++l) {
        const MatrixT<T>& x = l == 0 ? inputs : trace.activations[l - 1];
        hidden_layer(model, l, x, mode, rng, trace.pre_activations[l], trace.activations[l],
                     dropout ? &trace.dropout_masks[l] : nullptr);
    }
    const auto& out = model.layers().back();
    trace.logits.noalias() = trace.activations.back() * out.weight;
    trace.logits.rowwise() += out.bias;
    return trace;
}

template <class T>
MatrixT<T> forward_from_layer(const Mlp<T>& model, std::size_t layer, const MatrixT<T>& activations) {
    if (layer >= model.n_hidden())
        throw ContractViolation("forward_from_layer: layer " + std::to_string(layer) + " out of range");
    if (static_cast<std::size_t>(activations.cols()) != model.width(layer))
        throw ContractViolation("forward_from_layer: activation width " + std::to_string(activations.cols()) +
                                " != layer width " + std::to_string(model.width(layer)));
    MatrixT<T> x = activations;
    MatrixT<T> pre, next;
    for (std::size_t l = layer + 1; l < model.n_hidden(); ++l) {
        hidden_layer<T>(model, l, x, Mode::Eval, nullptr, pre, next, nullptr);
        x.swap(next);
    }
    const auto& out = model.layers().back();
    MatrixT<T> logits;
    logits.noalias() = x * out.weight;
    logits.rowwise() += out.bias;
    return logits;
}

template <class T>
std::vector<double> sigmoid_cross_entropy(const MatrixT<T>& logits, const MatrixT<T>& labels) {
    if (logits.rows() != labels.rows() || logits.cols() != labels.cols())
        throw ContractViolation("sigmoid_cross_entropy: shape mismatch");
    std::vector<double> loss(static_cast<std::size_t>(logits.cols()), 0.0);
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index f = 0; f < logits.cols(); ++f) {
            const double z = logits(i, f), y = labels(i, f);
            loss[static_cast<std::size_t>(f)] += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        }
    for (auto& l : loss) l /= static_cast<double>(std::max<Eigen::Index>(logits.rows(), 1));
    return loss;
}

template <class T>
std::vector<double> binary_accuracy(const MatrixT<T>& logits, const MatrixT<T>& labels) {
    if (logits.rows() != labels.rows() || logits.cols() != labels.cols())
        throw ContractViolation("binary_accuracy: shape mismatch");
    std::vector<double> acc(static_cast<std::size_t>(logits.cols()), 0.0);
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index f = 0; f < logits.cols(); ++f)
            if ((logits(i, f) > 0) == (labels(i, f) > 0.5)) acc[static_cast<std::size_t>(f)] += 1.0;
    for (auto& a : acc) a /= static_cast<double>(std::max<Eigen::Index>(logits.rows(), 1));
    return acc;
}

template <class T>
LossAndGrads<T> loss_and_grads(const Mlp<T>& model, const MatrixT<T>& inputs, const MatrixT<T>& labels,
                               std::span<const double> loss_mask, Mode mode, Rng* rng) {
    const auto out_dim = model.config().output_dim;
    if (static_cast<std::size_t>(labels.cols()) != out_dim || labels.rows() != inputs.rows())
        throw ContractViolation("loss_and_grads: labels must be batch x output_dim");
    if (loss_mask.size() != out_dim) throw ContractViolation("loss_and_grads: mask width != output_dim");

    const ForwardTrace<T> trace = forward(model, inputs, mode, rng);
    LossAndGrads<T> result;
    result.feature_losses = sigmoid_cross_entropy(trace.logits, labels);
    for (std::size_t f = 0; f < out_dim; ++f) {
        if (!std::isfinite(result.feature_losses[f])) throw NumericError("non-finite loss on output " + std::to_string(f));
        result.total += loss_mask[f] * result.feature_losses[f];
    }

    const T inv_batch = static_cast<T>(1.0 / static_cast<double>(inputs.rows()));
    MatrixT<T> delta = trace.logits.unaryExpr([](T z) { return T(1) / (T(1) + std::exp(-z)); }) - labels;
    for (std::size_t f = 0; f < out_dim; ++f)
        delta.col(static_cast<Eigen::Index>(f)) *= static_cast<T>(loss_mask[f]) * inv_batch;

    const std::size_t H = model.n_hidden();
    result.grads.resize(H + 1);
    auto& g_out = result.grads[H];
    g_out.weight.noalias() = trace.activations.back().transpose() * delta;
    g_out.bias = delta.colwise().sum();

    // Gradient with respect to the current hidden layer's output.
    MatrixT<T> d_act;
    d_act.noalias() = delta * model.layers()[H].weight.transpose();
    for (std::size_t l = H; l-- > 0;) {
        const MatrixT<T>& x = l == 0 ? inputs : trace.activations[l - 1];
        MatrixT<T> dz = d_act;
        if (!trace.dropout_masks.empty()) dz.array() *= trace.dropout_masks[l].array();
        dz.array() *= nonlinearity_grad(model.config().nonlinearity, trace.pre_activations[l]).array();
        auto& g = result.grads[l];
        g.weight.noalias() = x.transpose() * dz;
        g.bias = dz.colwise().sum();
        if (l > 0) {
            MatrixT<T> d_in;
            d_in.noalias() = dz * model.layers()[l].weight.transpose();
            if (model.has_skip(l)) d_in += d_act;
            d_act.swap(d_in);
        }
    }
    return result;
}

#define RBLAB_INSTANTIATE_NN(T)                                                                                     \
    template class Mlp<T>;                                                                                          \
    template struct LossAndGrads<T>;                                                                                \
    template ForwardTrace<T> forward<T>(const Mlp<T>&, const MatrixT<T>&, Mode, Rng*);                              \
    template MatrixT<T> forward_from_layer<T>(const Mlp<T>&, std::size_t, const MatrixT<T>&);                       \
    template std::vector<double> sigmoid_cross_entropy<T>(const MatrixT<T>&, const MatrixT<T>&);                    \
    template std::vector<double> binary_accuracy<T>(const MatrixT<T>&, const MatrixT<T>&);                          \
    template LossAndGrads<T> loss_and_grads<T>(const Mlp<T>&, const MatrixT<T>&, const MatrixT<T>&,                 \
                                               std::span<const double>, Mode, Rng*);

RBLAB_INSTANTIATE_NN(float)
RBLAB_INSTANTIATE_NN(double)

}  // namespace rblab
