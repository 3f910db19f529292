#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rblab {

enum class OptimizerKind { Sgd, Adagrad, Adam, AdamW, Lion };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::Sgd;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;  // decoupled; used by ADAMW and LION
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    /// Conventional defaults per kind (LION uses betas 0.9 / 0.99).
    static OptimizerSpec defaults(OptimizerKind kind, double learning_rate);
    void validate() const;
    bool operator==(const OptimizerSpec&) const = default;
};

/// First-order optimizer with per-tensor accumulators.
///
/// Parameters and gradients are passed as lists of flat tensors; the shapes seen
/// on the first step fix the accumulator shapes.
template <class T>
class Optimizer {
public:
    explicit Optimizer(OptimizerSpec spec);

    void step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads);

    const OptimizerSpec& spec() const { return spec_; }
    std::uint64_t step_count() const { return t_; }

    // Accumulators, exposed for serialization. `first` holds Adam/Lion momentum and
    // the Adagrad sum of squares; `second` holds Adam's second moment.
    std::vector<std::vector<T>>& first_moments() { return m_; }
    std::vector<std::vector<T>>& second_moments() { return v_; }
    const std::vector<std::vector<T>>& first_moments() const { return m_; }
    const std::vector<std::vector<T>>& second_moments() const { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

private:
    void ensure_state(std::span<const std::span<T>> params);

    OptimizerSpec spec_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
};

}  // namespace rblab
