#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hwymarl/env.hpp"
#include "hwymarl/nn.hpp"

namespace hwy {

struct Hyperparams {
    double gamma = 0.99;
    double eta = 5e-4;
    int rollout_len = 20;
    std::int64_t total_steps = 50000;
    int eval_every = 200;  // training episodes between evaluations
    int eval_episodes = 3;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    bool normalize_advantages = true;
    // Rewards are divided by this before returns are formed so the value loss does
    // not swamp the policy term in the shared trunk. Metrics stay in raw units.
    double reward_scale = 20.0;
    std::uint64_t seed = 0;
    int n_envs = 8;   // independent environments collected per update
    int threads = 1;  // 1 = fully serial

    void validate() const;
};

struct TrainConfig {
    EnvConfig env;
    DensityMode density = DensityMode::D1;
    Hyperparams hp;
    nn::Architecture arch;
    nn::AdamConfig adam;
};

std::vector<double> compute_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                    double bootstrap, double gamma);

std::vector<double> compute_advantages(std::span<const double> returns, std::span<const double> values,
                                       bool normalize = true);

struct Transition {
    Observation obs;
    int action = 0;
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
    std::int64_t step = 0;  // environment step at which the action was taken
};

// One agent's contiguous experience inside one episode and one rollout window.
struct Trajectory {
    std::uint64_t episode = 0;
    VehicleId agent = 0;
    std::vector<Transition> steps;
    double bootstrap = 0.0;  // V(s) after the last step when the window cut a live agent
};

struct RolloutBuffer {
    std::vector<Trajectory> trajectories;

    std::size_t transitions() const;
    bool empty() const { return transitions() == 0; }
    void clear() { trajectories.clear(); }
};

struct EpisodeRecord {
    double ret = 0.0;  // mean over agents of summed local rewards
    int length = 0;
    bool collision = false;
    int lane_changes = 0;
    std::vector<double> speeds;
    std::vector<double> accelerations;
};

// A live environment plus the bookkeeping that survives across rollout windows.
struct EnvRunner {
    WorldState world;
    std::map<VehicleId, Observation> obs;
    std::uint64_t base_seed = 0;
    std::uint64_t episode_index = 0;
    Rng action_rng;
    std::map<VehicleId, std::size_t> open;  // agent -> trajectory index in the current buffer
    std::map<VehicleId, double> returns;
    std::size_t agents_at_reset = 0;
    EpisodeRecord current;

    EnvRunner(const TrainConfig& config, std::uint64_t seed);
    void reset(const TrainConfig& config);
};

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index);

struct RolloutStats {
    std::vector<EpisodeRecord> finished;
    std::int64_t steps = 0;
};

RolloutStats collect_rollout(EnvRunner& runner, const nn::NetworkParams& params, RolloutBuffer& buffer,
                             int rollout_len, const TrainConfig& config);

struct UpdateStats {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double grad_norm = 0.0;
    std::size_t batch = 0;
};

// Builds the pooled training batch (returns and, optionally normalized, advantages).
std::vector<nn::Sample> build_batch(const RolloutBuffer& buffer, const Hyperparams& hp);

UpdateStats update(nn::NetworkParams& params, nn::AdamState& adam, RolloutBuffer& buffer, const Hyperparams& hp,
                   const nn::AdamConfig& adam_config = {});

using Policy = std::function<int(const Observation&, Rng&)>;

Policy greedy_policy(const nn::NetworkParams& params);
Policy random_policy();
Policy idle_policy();

struct EvalMetrics {
    int episodes = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double collision_rate = 0.0;
    double mean_speed = 0.0;
    double accel_std = 0.0;
    double lane_changes_per_episode = 0.0;
};

// Per-step callback used by trace export: world after the step plus the actions that produced it.
using StepObserver = std::function<void(const WorldState&, const std::map<VehicleId, AvAction>&, const StepResult&)>;

EpisodeRecord run_episode(const Policy& policy, const EnvConfig& env, DensityMode density, std::uint64_t seed,
                          Rng& policy_rng, int max_steps = -1, const StepObserver& observer = {});

EvalMetrics evaluate(const Policy& policy, const EnvConfig& env, DensityMode density, int episodes,
                     std::uint64_t seed);
EvalMetrics evaluate(const nn::NetworkParams& params, const EnvConfig& env, DensityMode density, int episodes,
                     std::uint64_t seed);

struct MetricsRow {
    std::int64_t step = 0;
    std::int64_t episode = 0;
    double eval_return_mean = 0.0;
    double eval_return_std = 0.0;
    double collision_rate = 0.0;
    double mean_speed = 0.0;
    double accel_std = 0.0;
    double lane_changes_per_episode = 0.0;
    double wall_clock_s = 0.0;
};

struct TrainState {
    std::optional<nn::NetworkParams> params;  // resume from these instead of a fresh init
    std::int64_t step = 0;
    std::int64_t episode = 0;
};

struct TrainResult {
    nn::NetworkParams final_params;
    nn::NetworkParams best_params;
    double best_return = 0.0;
    std::vector<MetricsRow> log;
    std::int64_t steps = 0;
    std::int64_t episodes = 0;
};

// Seed of the fixed evaluation episode set used during training.
std::uint64_t eval_seed_for(std::uint64_t train_seed);

TrainResult train(const TrainConfig& config, const TrainState& start = {},
                  const std::function<void(const MetricsRow&)>& on_eval = {});

}  // namespace hwy
