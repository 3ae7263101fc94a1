#pragma once

#include <cmath>
#include <vector>

#include "kgmix/errors.hpp"
#include "kgmix/tensor.hpp"

namespace kgmix {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias-corrected moments. One accumulator pair per parameter
// tensor; shapes are checked on every step.
class AdamState {
  public:
    AdamState() = default;

    AdamState(const std::vector<const Tensor*>& params, AdamConfig cfg) : cfg_(cfg) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    uint64_t step_count() const { return t_; }

    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ConfigError("AdamState::step: parameter count mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = *grads[k];
            if (!p.same_shape(m_[k]) || !g.same_shape(m_[k]))
                throw ConfigError("AdamState::step: shape mismatch");
            Tensor& m = m_[k];
            Tensor& v = v_[k];
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

  private:
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    uint64_t t_ = 0;
};

}  // namespace kgmix
