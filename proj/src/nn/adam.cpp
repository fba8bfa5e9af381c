#include <cmath>

#include "hwymarl/errors.hpp"
#include "hwymarl/nn.hpp"

namespace hwy::nn {

double global_norm(std::span<const double> g) {
    double sq = 0.0;
    for (double x : g) sq += x * x;
    return std::sqrt(sq);
}

double apply_update(NetworkParams& params, std::span<const double> grad, AdamState& state, double learning_rate,
                    const AdamConfig& config) {
    const std::size_t n = params.size();
    if (grad.size() != n) throw ContractError("gradient size does not match parameter count");
    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
        state.step = 0;
    }

    const double norm = global_norm(grad);
    const double clip = norm > config.max_grad_norm && norm > 0.0 ? config.max_grad_norm / norm : 1.0;

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    auto p = params.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] * clip;
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    return norm;
}

}  // namespace hwy::nn
