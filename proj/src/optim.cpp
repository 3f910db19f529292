#include "rblab/optim.hpp"

#include <cmath>

#include "rblab/errors.hpp"

namespace rblab {

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Adagrad: return "adagrad";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::AdamW: return "adamw";
        case OptimizerKind::Lion: return "lion";
    }
    return "?";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    for (auto k : {OptimizerKind::Sgd, OptimizerKind::Adagrad, OptimizerKind::Adam, OptimizerKind::AdamW,
                   OptimizerKind::Lion})
        if (to_string(k) == name) return k;
    throw ContractViolation("unknown optimizer '" + name + "'");
}

OptimizerSpec OptimizerSpec::defaults(OptimizerKind kind, double learning_rate) {
    OptimizerSpec spec;
    spec.kind = kind;
    spec.learning_rate = learning_rate;
    if (kind == OptimizerKind::Lion) spec.beta2 = 0.99;
    return spec;
}

void OptimizerSpec::validate() const {
    if (!(learning_rate > 0.0)) throw ContractViolation("optimizer: learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ContractViolation("optimizer: weight_decay must be nonnegative");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw ContractViolation("optimizer: betas must lie in [0, 1)");
    if (!(epsilon >= 0.0)) throw ContractViolation("optimizer: epsilon must be nonnegative");
}

template <class T>
Optimizer<T>::Optimizer(OptimizerSpec spec) : spec_(spec) {
    spec_.validate();
}

template <class T>
void Optimizer<T>::ensure_state(std::span<const std::span<T>> params) {
    if (!m_.empty()) {
        if (m_.size() != params.size()) throw ContractViolation("optimizer: parameter list changed shape");
        for (std::size_t i = 0; i < params.size(); ++i)
            if (m_[i].size() != params[i].size()) throw ContractViolation("optimizer: parameter tensor changed shape");
        return;
    }
    for (const auto& p : params) {
        m_.emplace_back(p.size(), T(0));
        v_.emplace_back(p.size(), T(0));
    }
}

template <class T>
void Optimizer<T>::step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads) {
    if (params.size() != grads.size()) throw ContractViolation("optimizer: params/grads count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size()) throw ContractViolation("optimizer: params/grads shape mismatch");
        for (T g : grads[i])
            if (!std::isfinite(g)) throw NumericError("optimizer: non-finite gradient");
    }
    ensure_state(params);
    ++t_;

    const double lr = spec_.learning_rate;
    const double b1 = spec_.beta1, b2 = spec_.beta2, eps = spec_.epsilon, wd = spec_.weight_decay;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i];
        auto g = grads[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            double pj = p[j];
            switch (spec_.kind) {
                case OptimizerKind::Sgd:
                    pj -= lr * gj;
                    break;
                case OptimizerKind::Adagrad: {
                    const double acc = m[j] + gj * gj;
                    m[j] = static_cast<T>(acc);
                    pj -= lr * gj / (std::sqrt(acc) + eps);
                    break;
                }
                case OptimizerKind::Adam:
                case OptimizerKind::AdamW: {
                    const double mj = b1 * m[j] + (1.0 - b1) * gj;
                    const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
                    m[j] = static_cast<T>(mj);
                    v[j] = static_cast<T>(vj);
                    if (spec_.kind == OptimizerKind::AdamW) pj -= lr * wd * pj;
                    pj -= lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps);
                    break;
                }
                case OptimizerKind::Lion: {
                    const double c = b1 * m[j] + (1.0 - b1) * gj;
                    const double sign = c > 0 ? 1.0 : (c < 0 ? -1.0 : 0.0);
                    pj -= lr * (sign + wd * pj);
                    m[j] = static_cast<T>(b2 * m[j] + (1.0 - b2) * gj);
                    break;
                }
            }
            p[j] = static_cast<T>(pj);
        }
    }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace rblab
