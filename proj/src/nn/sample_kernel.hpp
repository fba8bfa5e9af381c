#pragma once

#include <cmath>
#include <span>

#include "hwymarl/nn.hpp"

namespace hwy::nn::detail {

struct LossTerms {
    double loss = 0.0;
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

inline void backprop_dense(std::span<const double> p, const Dense& d, const double* input, const double* dout,
                           double* grad, double* din) {
    const double* w = p.data() + d.weight;
    for (std::size_t o = 0; o < d.out; ++o) {
        const double g = dout[o];
        if (g == 0.0) continue;
        double* gw = grad + d.weight + o * d.in;
        for (std::size_t i = 0; i < d.in; ++i) gw[i] += g * input[i];
        grad[d.bias + o] += g;
        if (din) {
            const double* row = w + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) din[i] += g * row[i];
        }
    }
}

inline void backprop_trunk(std::span<const double> p, const Trunk& t, const TrunkActivations& act,
                           std::vector<double>& d_fused, double* grad) {
    for (std::size_t k = 0; k < d_fused.size(); ++k) {
        if (act.fused[k] <= 0.0) d_fused[k] = 0.0;
    }
    std::vector<double> d_hidden(act.hidden.size(), 0.0);
    backprop_dense(p, t.fusion, act.hidden.data(), d_fused.data(), grad, d_hidden.data());
    for (std::size_t k = 0; k < d_hidden.size(); ++k) {
        if (act.hidden[k] <= 0.0) d_hidden[k] = 0.0;
    }
    backprop_dense(p, t.pos, act.pos_in.data(), d_hidden.data(), grad, nullptr);
    backprop_dense(p, t.vel, act.vel_in.data(), d_hidden.data() + t.pos.out, grad, nullptr);
}

// Adds scale * dL_sample/dparams into grad and returns the unscaled loss terms.
inline LossTerms accumulate_sample(const NetworkParams& params, const Sample& s, const LossCoefficients& coef,
                                   double scale, ForwardCache& cache, double* grad) {
    forward(params, s.obs, cache);
    const NetworkOutput& out = cache.out;

    double top = out.logits[0];
    for (double z : out.logits) top = z > top ? z : top;
    double sum = 0.0;
    for (double z : out.logits) sum += std::exp(z - top);
    const double log_norm = top + std::log(sum);

    std::array<double, kNumActions> log_p{};
    double entropy = 0.0;
    for (int k = 0; k < kNumActions; ++k) {
        log_p[k] = out.logits[k] - log_norm;
        entropy -= out.probs[k] * log_p[k];
    }

    LossTerms terms;
    terms.policy = -log_p[s.action] * s.advantage;
    const double err = s.ret - out.value;
    terms.value = err * err;
    terms.entropy = entropy;
    terms.loss = terms.policy + coef.value_coef * terms.value - coef.entropy_coef * entropy;

    std::array<double, kNumActions> d_logits{};
    for (int k = 0; k < kNumActions; ++k) {
        const double onehot = k == s.action ? 1.0 : 0.0;
        d_logits[k] = scale * (s.advantage * (out.probs[k] - onehot) +
                               coef.entropy_coef * out.probs[k] * (log_p[k] + entropy));
    }
    const double d_value = scale * (-2.0 * coef.value_coef * err);

    const auto p = params.values();
    const Layout& layout = params.layout();
    const std::size_t fus = layout.actor.in;
    std::vector<double> d_actor(fus, 0.0);
    std::vector<double> d_critic(fus, 0.0);
    backprop_dense(p, layout.actor, cache.trunks.front().fused.data(), d_logits.data(), grad, d_actor.data());
    backprop_dense(p, layout.critic, cache.trunks.back().fused.data(), &d_value, grad, d_critic.data());

    if (layout.trunks.size() == 1) {
        for (std::size_t k = 0; k < fus; ++k) d_actor[k] += d_critic[k];
        backprop_trunk(p, layout.trunks[0], cache.trunks[0], d_actor, grad);
    } else {
        backprop_trunk(p, layout.trunks[0], cache.trunks[0], d_actor, grad);
        backprop_trunk(p, layout.trunks[1], cache.trunks[1], d_critic, grad);
    }
    return terms;
}

}  // namespace hwy::nn::detail
