#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rblab/linalg.hpp"
#include "rblab/rng.hpp"

namespace rblab {

enum class Nonlinearity { LeakyRelu, Tanh };
enum class Mode { Train, Eval };

std::string to_string(Nonlinearity n);
Nonlinearity nonlinearity_from_string(const std::string& name);

inline constexpr double kLeakySlope = 0.01;

struct MlpConfig {
    std::size_t input_dim = 64;
    std::vector<std::size_t> hidden_sizes{256, 128, 64, 64};
    std::size_t output_dim = 2;
    Nonlinearity nonlinearity = Nonlinearity::LeakyRelu;
    bool residual = false;
    double dropout_rate = 0.0;
    double init_scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const MlpConfig&) const = default;
};

template <class T>
struct DenseLayer {
    MatrixT<T> weight;  // fan_in x fan_out
    RowVectorT<T> bias;
};

/// Fully connected network: hidden layers with a pointwise nonlinearity,
/// then an affine output layer producing one logit per binary feature.
template <class T>
class Mlp {
public:
    Mlp() = default;
    /// All-zero parameters with shapes from `config`.
    explicit Mlp(MlpConfig config);

    /// Truncated-normal variance-scaling init (variance init_scale / fan_in), zero biases.
    static Mlp init(const MlpConfig& config);

    const MlpConfig& config() const { return config_; }
    std::vector<DenseLayer<T>>& layers() { return layers_; }
    const std::vector<DenseLayer<T>>& layers() const { return layers_; }

    std::size_t n_hidden() const { return config_.hidden_sizes.size(); }
    /// Width of hidden layer `l`'s output.
    std::size_t width(std::size_t l) const { return config_.hidden_sizes.at(l); }
    /// Whether hidden layer `l` adds an identity skip (residual and equal widths).
    bool has_skip(std::size_t l) const;
    std::size_t parameter_count() const;

    std::vector<std::span<T>> parameter_views();
    bool all_finite() const;

    template <class U>
    Mlp<U> cast() const {
        Mlp<U> out(config_);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            out.layers()[i].weight = layers_[i].weight.template cast<U>();
            out.layers()[i].bias = layers_[i].bias.template cast<U>();
        }
        return out;
    }

private:
    MlpConfig config_;
    std::vector<DenseLayer<T>> layers_;
};

template <class T>
struct ForwardTrace {
    std::vector<MatrixT<T>> pre_activations;  // x W + b per hidden layer
    std::vector<MatrixT<T>> activations;      // output of each hidden layer
    std::vector<MatrixT<T>> dropout_masks;    // TRAIN only: 0 or 1/(1-rate)
    MatrixT<T> logits;
};

/// TRAIN mode applies inverted dropout after each hidden nonlinearity and needs `rng`
/// when dropout_rate > 0.
template <class T>
ForwardTrace<T> forward(const Mlp<T>& model, const MatrixT<T>& inputs, Mode mode = Mode::Eval, Rng* rng = nullptr);

/// Continues an EVAL forward pass from the output of hidden layer `layer`.
template <class T>
MatrixT<T> forward_from_layer(const Mlp<T>& model, std::size_t layer, const MatrixT<T>& activations);

template <class T>
struct LossAndGrads {
    std::vector<double> feature_losses;  // mean sigmoid cross-entropy per output, unmasked
    double total = 0.0;                  // sum_f mask_f * feature_losses[f]
    std::vector<DenseLayer<T>> grads;    // d total / d parameters

    std::vector<std::span<const T>> gradient_views() const;
};

template <class T>
LossAndGrads<T> loss_and_grads(const Mlp<T>& model, const MatrixT<T>& inputs, const MatrixT<T>& labels,
                               std::span<const double> loss_mask, Mode mode = Mode::Eval, Rng* rng = nullptr);

/// Mean sigmoid cross-entropy per output column (no gradients).
template <class T>
std::vector<double> sigmoid_cross_entropy(const MatrixT<T>& logits, const MatrixT<T>& labels);

/// Fraction of rows where (logit > 0) agrees with the 0/1 label, per column.
template <class T>
std::vector<double> binary_accuracy(const MatrixT<T>& logits, const MatrixT<T>& labels);

using MlpF = Mlp<float>;
using MlpD = Mlp<double>;

}  // namespace rblab
