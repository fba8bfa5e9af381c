#include <algorithm>
#include <cmath>
#include <string>

#include "hwymarl/errors.hpp"
#include "hwymarl/nn.hpp"

namespace hwy::nn {

const char* to_string(TrunkMode mode) { return mode == TrunkMode::Shared ? "shared" : "separate"; }

TrunkMode parse_trunk(const std::string& text) {
    if (text == "shared") return TrunkMode::Shared;
    if (text == "separate") return TrunkMode::Separate;
    throw ContractError("unknown trunk mode '" + text + "' (expected shared or separate)");
}

namespace {

Dense place(std::size_t in, std::size_t out, std::size_t& cursor) {
    Dense d{in, out, cursor, cursor + in * out};
    cursor += in * out + out;
    return d;
}

void init_dense(std::span<double> values, const Dense& d, double scale, Rng& rng) {
    const double bound = scale / std::sqrt(static_cast<double>(d.in));
    for (std::size_t i = 0; i < d.in * d.out; ++i) values[d.weight + i] = rng.uniform(-bound, bound);
}

void affine(std::span<const double> p, const Dense& d, const double* in, double* out) {
    const double* w = p.data() + d.weight;
    for (std::size_t o = 0; o < d.out; ++o) {
        double acc = p[d.bias + o];
        const double* row = w + o * d.in;
        for (std::size_t i = 0; i < d.in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

void relu(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void run_trunk(std::span<const double> p, const Trunk& t, const Observation& obs, TrunkActivations& act) {
    const std::size_t n_in = t.pos.in;
    act.pos_in.resize(n_in);
    act.vel_in.resize(n_in);
    for (int r = 0; r < obs.rows; ++r) {
        const auto k = static_cast<std::size_t>(2 * r);
        act.pos_in[k] = obs.at(r, 0);
        act.pos_in[k + 1] = obs.at(r, 1);
        act.vel_in[k] = obs.at(r, 2);
        act.vel_in[k + 1] = obs.at(r, 3);
    }
    act.hidden.resize(t.pos.out + t.vel.out);
    affine(p, t.pos, act.pos_in.data(), act.hidden.data());
    affine(p, t.vel, act.vel_in.data(), act.hidden.data() + t.pos.out);
    relu(act.hidden);
    act.fused.resize(t.fusion.out);
    affine(p, t.fusion, act.hidden.data(), act.fused.data());
    relu(act.fused);
}

}  // namespace

Layout make_layout(const Architecture& arch) {
    if (arch.n_obs < 1 || arch.encoder_width < 1 || arch.fusion_width < 1 || arch.n_actions != kNumActions) {
        throw ContractError("invalid network architecture");
    }
    const auto enc_in = static_cast<std::size_t>(arch.encoder_inputs());
    const auto enc = static_cast<std::size_t>(arch.encoder_width);
    const auto fus = static_cast<std::size_t>(arch.fusion_width);

    Layout layout;
    std::size_t cursor = 0;
    const int n_trunks = arch.trunk == TrunkMode::Shared ? 1 : 2;
    for (int i = 0; i < n_trunks; ++i) {
        Trunk t;
        t.pos = place(enc_in, enc, cursor);
        t.vel = place(enc_in, enc, cursor);
        t.fusion = place(2 * enc, fus, cursor);
        layout.trunks.push_back(t);
    }
    layout.actor = place(fus, static_cast<std::size_t>(arch.n_actions), cursor);
    layout.critic = place(fus, 1, cursor);
    layout.size = cursor;
    return layout;
}

NetworkParams::NetworkParams(const Architecture& arch)
    : arch_(arch), layout_(make_layout(arch)), values_(layout_.size, 0.0) {}

NetworkParams NetworkParams::initialized(const Architecture& arch, Rng& rng) {
    NetworkParams p(arch);
    for (const Trunk& t : p.layout_.trunks) {
        init_dense(p.values_, t.pos, 1.0, rng);
        init_dense(p.values_, t.vel, 1.0, rng);
        init_dense(p.values_, t.fusion, 1.0, rng);
    }
    init_dense(p.values_, p.layout_.actor, 0.01, rng);
    init_dense(p.values_, p.layout_.critic, 1.0, rng);
    return p;
}

bool NetworkParams::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

std::array<double, kNumActions> softmax(const std::array<double, kNumActions>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::array<double, kNumActions> p{};
    double sum = 0.0;
    for (int k = 0; k < kNumActions; ++k) sum += (p[k] = std::exp(logits[k] - top));
    for (double& x : p) x /= sum;
    return p;
}

void forward(const NetworkParams& params, const Observation& obs, ForwardCache& cache) {
    const Architecture& arch = params.architecture();
    if (obs.rows != arch.n_obs || obs.data.size() != static_cast<std::size_t>(obs.rows * kNumFeatures)) {
        throw ContractError("observation has " + std::to_string(obs.rows) + " rows, network expects " +
                            std::to_string(arch.n_obs));
    }
    const Layout& layout = params.layout();
    const auto p = params.values();
    cache.trunks.resize(layout.trunks.size());
    for (std::size_t i = 0; i < layout.trunks.size(); ++i) run_trunk(p, layout.trunks[i], obs, cache.trunks[i]);

    NetworkOutput& out = cache.out;
    affine(p, layout.actor, cache.trunks.front().fused.data(), out.logits.data());
    affine(p, layout.critic, cache.trunks.back().fused.data(), &out.value);
    out.probs = softmax(out.logits);
}

NetworkOutput forward(const NetworkParams& params, const Observation& obs) {
    ForwardCache cache;
    forward(params, obs, cache);
    return cache.out;
}

int sample_action(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    int last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        last_positive = static_cast<int>(k);
        cumulative += probs[k];
        if (u < cumulative) return static_cast<int>(k);
    }
    return last_positive;
}

int greedy_action(std::span<const double> probs) {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

}  // namespace hwy::nn
