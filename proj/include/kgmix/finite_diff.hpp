#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "kgmix/errors.hpp"
#include "kgmix/tensor.hpp"

namespace kgmix {

// Central-difference gradient estimate, coordinate by coordinate. Slow by
// design; this is the reference the analytic backward passes are checked
// against, so it must not share any code with them.
inline std::vector<Tensor> finite_diff_grad(
    const std::function<double(const std::vector<Tensor>&)>& f, std::vector<Tensor> params,
    double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Tensor& p : params) grads.emplace_back(p.shape());
    for (size_t k = 0; k < params.size(); ++k) {
        for (size_t i = 0; i < params[k].size(); ++i) {
            const double orig = params[k][i];
            params[k][i] = orig + h;
            const double fp = f(params);
            params[k][i] = orig - h;
            const double fm = f(params);
            params[k][i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw ComputeError("finite_diff_grad: function value not finite");
            grads[k][i] = (fp - fm) / (2.0 * h);
        }
    }
    return grads;
}

}  // namespace kgmix
