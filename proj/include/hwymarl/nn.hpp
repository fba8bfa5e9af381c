#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hwymarl/env.hpp"
#include "hwymarl/rng.hpp"

namespace hwy::nn {

// Shared: actor and critic heads sit on one encoder/fusion trunk.
// Separate: each head owns a full trunk of its own.
enum class TrunkMode : std::uint32_t { Shared = 0, Separate = 1 };

const char* to_string(TrunkMode mode);
TrunkMode parse_trunk(const std::string& text);

struct Architecture {
    int n_obs = 5;
    int encoder_width = 64;
    int fusion_width = 128;
    int n_actions = kNumActions;
    TrunkMode trunk = TrunkMode::Shared;

    // Each encoder sees one pair of columns over all observation rows.
    int encoder_inputs() const { return 2 * n_obs; }
    bool operator==(const Architecture&) const = default;
};

// Offsets of one affine layer inside the flat parameter vector; W is out x in, row-major.
struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight = 0;
    std::size_t bias = 0;
};

struct Trunk {
    Dense pos;     // (dx, dy) columns -> encoder_width
    Dense vel;     // (dvx, dvy) columns -> encoder_width
    Dense fusion;  // 2 * encoder_width -> fusion_width
};

struct Layout {
    std::vector<Trunk> trunks;  // [shared] or [actor, critic]
    Dense actor;
    Dense critic;
    std::size_t size = 0;

    const Trunk& actor_trunk() const { return trunks.front(); }
    const Trunk& critic_trunk() const { return trunks.back(); }
};

Layout make_layout(const Architecture& arch);

class NetworkParams {
public:
    NetworkParams() : NetworkParams(Architecture{}) {}
    // All parameters zero.
    explicit NetworkParams(const Architecture& arch);

    // Uniform(+-1/sqrt(fan_in)) weights, zero biases, actor head scaled down for a near-uniform start.
    static NetworkParams initialized(const Architecture& arch, Rng& rng);

    const Architecture& architecture() const { return arch_; }
    const Layout& layout() const { return layout_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    bool all_finite() const;
    bool operator==(const NetworkParams& o) const { return arch_ == o.arch_ && values_ == o.values_; }

private:
    Architecture arch_;
    Layout layout_;
    std::vector<double> values_;
};

struct NetworkOutput {
    std::array<double, kNumActions> logits{};
    std::array<double, kNumActions> probs{};
    double value = 0.0;
};

// Intermediate activations of one forward pass, kept for backpropagation.
struct TrunkActivations {
    std::vector<double> pos_in, vel_in;
    std::vector<double> hidden;  // concat(pos, vel) after ReLU
    std::vector<double> fused;   // after ReLU
};

struct ForwardCache {
    std::vector<TrunkActivations> trunks;
    NetworkOutput out;
};

NetworkOutput forward(const NetworkParams& params, const Observation& obs);
void forward(const NetworkParams& params, const Observation& obs, ForwardCache& cache);

// Numerically stable softmax (max subtraction).
std::array<double, kNumActions> softmax(const std::array<double, kNumActions>& logits);

int sample_action(std::span<const double> probs, Rng& rng);
// Argmax, ties to the lowest index.
int greedy_action(std::span<const double> probs);

struct Sample {
    Observation obs;
    int action = 0;
    double advantage = 0.0;
    double ret = 0.0;
};

struct LossCoefficients {
    double value_coef = 0.5;
    double entropy_coef = 0.01;
};

struct Gradient {
    std::vector<double> grad;
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Loss L = mean[-log pi(a|s) * A + c_v (R - V)^2 - c_e H(pi)] and its exact gradient.
// Reference implementation: one pass over the batch, accumulated in sample order.
Gradient backward_serial(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef);

// OpenMP version. The batch is cut into fixed-size chunks whose partial sums are
// reduced in chunk order, so the result does not depend on the thread count.
Gradient backward_parallel(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                           int threads);

inline constexpr std::size_t kGradientChunk = 16;

// Dispatches on thread count; throws TrainingFault on a non-finite loss.
Gradient backward(const NetworkParams& params, std::span<const Sample> batch, const LossCoefficients& coef,
                  int threads = 1);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double max_grad_norm = 0.5;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    bool operator==(const AdamState&) const = default;
};

double global_norm(std::span<const double> g);

// Clips the gradient to max_grad_norm, then takes one Adam descent step. Returns the pre-clip norm.
double apply_update(NetworkParams& params, std::span<const double> grad, AdamState& state, double learning_rate,
                    const AdamConfig& config = {});

// Checkpoint layout (all little-endian):
//   char[4] "HWNN" | u32 version | u32 n_obs | u32 encoder_width | u32 fusion_width
//   | u32 n_actions | u32 trunk | u64 count | f64[count] parameters in layout order
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const NetworkParams& params);
NetworkParams deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hwy::nn
