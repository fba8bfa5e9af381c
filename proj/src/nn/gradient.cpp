#include <algorithm>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hwymarl/errors.hpp"
#include "hwymarl/nn.hpp"
#include "sample_kernel.hpp"

namespace hwy::nn {

namespace {

void check_batch(const NetworkParams& params, std::span<const Sample> batch) {
    if (batch.empty()) throw ContractError("gradient requested for an empty batch");
    for (const Sample& s : batch) {
        if (s.action < 0 || s.action >= kNumActions) throw ContractError("sample action out of range");
        if (s.obs.rows != params.architecture().n_obs) throw ContractError("sample observation shape mismatch");
    }
}

void finish(Gradient& g, double inv_n) {
    g.loss *= inv_n;
    g.policy_loss *= inv_n;
    g.value_loss *= inv_n;
    g.entropy *= inv_n;
}

void add_terms(Gradient& g, const detail::LossTerms& t) {
    g.loss += t.loss;
    g.policy_loss += t.policy;
    g.value_loss += t.value;
    g.entropy += t.entropy;
}

}  // namespace

Gradient backward_serial(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef) {
    check_batch(params, batch);
    Gradient g;
    g.grad.assign(params.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;
    for (const Sample& s : batch) add_terms(g, detail::accumulate_sample(params, s, coef, inv_n, cache, g.grad.data()));
    finish(g, inv_n);
    return g;
}

Gradient backward_parallel(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                           int threads) {
    check_batch(params, batch);
    const std::size_t n = batch.size();
    const std::size_t n_chunks = (n + kGradientChunk - 1) / kGradientChunk;
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<std::vector<double>> partial(n_chunks);
    std::vector<Gradient> terms(n_chunks);

#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
        const auto chunk = static_cast<std::size_t>(c);
        partial[chunk].assign(params.size(), 0.0);
        ForwardCache cache;
        const std::size_t end = std::min(n, (chunk + 1) * kGradientChunk);
        for (std::size_t i = chunk * kGradientChunk; i < end; ++i) {
            add_terms(terms[chunk],
                      detail::accumulate_sample(params, batch[i], coef, inv_n, cache, partial[chunk].data()));
        }
    }

    Gradient g;
    g.grad = std::move(partial[0]);
    add_terms(g, {terms[0].loss, terms[0].policy_loss, terms[0].value_loss, terms[0].entropy});
    for (std::size_t c = 1; c < n_chunks; ++c) {
        const auto& part = partial[c];
        for (std::size_t k = 0; k < g.grad.size(); ++k) g.grad[k] += part[k];
        add_terms(g, {terms[c].loss, terms[c].policy_loss, terms[c].value_loss, terms[c].entropy});
    }
    finish(g, inv_n);
    return g;
}

Gradient backward(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                  int threads) {
    Gradient g = threads <= 1 ? backward_serial(params, batch, coef) : backward_parallel(params, batch, coef, threads);
    if (!std::isfinite(g.loss) ||
        !std::all_of(g.grad.begin(), g.grad.end(), [](double x) { return std::isfinite(x); })) {
        throw TrainingFault("non-finite loss or gradient (loss = " + std::to_string(g.loss) + ")");
    }
    return g;
}

}  // namespace hwy::nn
