#ifndef DART_OPTIM_HPP
#define DART_OPTIM_HPP

#include <cmath>
#include <vector>

#include "dart/tensor.hpp"

namespace dart {

// Global L2 clipping over all parameter gradients. Returns the pre-clip
// norm; gradients are rescaled in place only when the norm exceeds max_norm.
template <typename T>
T clip_grad_norm(std::vector<ParameterT<T>>& params, T max_norm) {
    double sq = 0.0;
    for (auto& p : params) {
        auto& g = p.tensor.grad();
        for (T v : g) sq += double(v) * double(v);
    }
    T norm = T(std::sqrt(sq));
    if (norm > max_norm && norm > T(0)) {
        const T s = max_norm / norm;
        for (auto& p : params)
            for (T& v : p.tensor.grad()) v *= s;
    }
    return norm;
}

// AdamW with decoupled weight decay: the decay shrinks the parameter
// multiplicatively, independent of the moment update.
template <typename T>
class AdamWT {
public:
    AdamWT(std::vector<ParameterT<T>>* params, T lr, T weight_decay = T(0),
           T beta1 = T(0.9), T beta2 = T(0.999), T epsilon = T(1e-8))
        : params_(params), lr_(lr), weight_decay_(weight_decay), beta1_(beta1),
          beta2_(beta2), epsilon_(epsilon) {
        m_.resize(params->size());
        v_.resize(params->size());
        for (size_t i = 0; i < params->size(); ++i) {
            m_[i].assign((*params)[i].tensor.numel(), T(0));
            v_[i].assign((*params)[i].tensor.numel(), T(0));
        }
    }

    void step() {
        for (auto& p : *params_)
            for (T g : p.tensor.grad())
                if (std::isnan(g) || std::isinf(g))
                    throw NumericError("adamw_step: non-finite gradient in parameter '" +
                                       p.name + "'");
        ++step_count_;
        const T bc1 = T(1) - T(std::pow(double(beta1_), double(step_count_)));
        const T bc2 = T(1) - T(std::pow(double(beta2_), double(step_count_)));
        for (size_t i = 0; i < params_->size(); ++i) {
            auto& vals = (*params_)[i].tensor.values();
            const auto& grads = (*params_)[i].tensor.grad();
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t j = 0; j < vals.size(); ++j) {
                if (weight_decay_ != T(0)) vals[j] -= lr_ * weight_decay_ * vals[j];
                const T g = grads[j];
                m[j] = beta1_ * m[j] + (T(1) - beta1_) * g;
                v[j] = beta2_ * v[j] + (T(1) - beta2_) * g * g;
                const T mhat = m[j] / bc1;
                const T vhat = v[j] / bc2;
                vals[j] -= lr_ * mhat / (T(std::sqrt(double(vhat))) + epsilon_);
            }
        }
    }

    void zero_grad() {
        for (auto& p : *params_) p.tensor.zero_grad();
    }

    long step_count() const { return step_count_; }
    T learning_rate() const { return lr_; }
    void set_learning_rate(T lr) { lr_ = lr; }

private:
    std::vector<ParameterT<T>>* params_;
    T lr_, weight_decay_, beta1_, beta2_, epsilon_;
    long step_count_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

using AdamW = AdamWT<float>;

}  // namespace dart

#endif
