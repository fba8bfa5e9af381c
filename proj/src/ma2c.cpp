#include "hwymarl/ma2c.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hwymarl/errors.hpp"

namespace hwy {

void Hyperparams::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("gamma must lie in (0, 1]");
    if (!(eta > 0.0)) throw ContractError("learning rate must be positive");
    if (rollout_len < 1) throw ContractError("rollout_len must be at least 1");
    if (total_steps < 0) throw ContractError("total_steps must be non-negative");
    if (eval_every < 1) throw ContractError("eval_every must be at least 1");
    if (eval_episodes < 1) throw ContractError("eval_episodes must be at least 1");
    if (n_envs < 1) throw ContractError("n_envs must be at least 1");
    if (!(reward_scale > 0.0)) throw ContractError("reward_scale must be positive");
}

std::vector<double> compute_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                    double bootstrap, double gamma) {
    if (rewards.size() != dones.size()) throw ContractError("rewards and done flags differ in length");
    std::vector<double> out(rewards.size());
    double next = bootstrap;
    for (std::size_t i = rewards.size(); i-- > 0;) {
        next = rewards[i] + (dones[i] ? 0.0 : gamma * next);
        out[i] = next;
    }
    return out;
}

std::vector<double> compute_advantages(std::span<const double> returns, std::span<const double> values,
                                       bool normalize) {
    if (returns.size() != values.size()) throw ContractError("returns and values differ in length");
    std::vector<double> adv(returns.size());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = returns[i] - values[i];
    if (!normalize || adv.empty()) return adv;

    const double n = static_cast<double>(adv.size());
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double stddev = std::max(std::sqrt(var / n), 1e-8);
    for (double& a : adv) a = (a - mean) / stddev;
    return adv;
}

std::size_t RolloutBuffer::transitions() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.steps.size();
    return n;
}

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t index) { return mix_seed(base, index); }

EnvRunner::EnvRunner(const TrainConfig& config, std::uint64_t seed)
    : base_seed(mix_seed(seed, 101)), action_rng(mix_seed(seed, 202)) {
    reset(config);
}

void EnvRunner::reset(const TrainConfig& config) {
    auto [w, o] = env_reset(config.density, episode_seed(base_seed, episode_index), config.env);
    world = std::move(w);
    obs = std::move(o);
    agents_at_reset = obs.size();
    open.clear();
    returns.clear();
    for (const auto& [id, ob] : obs) returns[id] = 0.0;
    current = {};
}

namespace {

void record_step(EpisodeRecord& rec, const StepResult& res) {
    for (const auto& [id, v] : res.info.speeds) rec.speeds.push_back(v);
    for (const auto& [id, a] : res.info.accelerations) rec.accelerations.push_back(a);
    for (const auto& [id, lc] : res.info.lane_changes) rec.lane_changes += lc ? 1 : 0;
    if (res.info.av_collision) rec.collision = true;
    ++rec.length;
}

double mean_return(const std::map<VehicleId, double>& returns, std::size_t agents) {
    double sum = 0.0;
    for (const auto& [id, r] : returns) sum += r;
    return agents ? sum / static_cast<double>(agents) : 0.0;
}

}  // namespace

RolloutStats collect_rollout(EnvRunner& runner, const nn::NetworkParams& params, RolloutBuffer& buffer,
                             int rollout_len, const TrainConfig& config) {
    RolloutStats stats;
    runner.open.clear();
    nn::ForwardCache cache;
    for (int t = 0; t < rollout_len; ++t) {
        std::map<VehicleId, AvAction> actions;
        std::map<VehicleId, double> values;
        for (const auto& [id, ob] : runner.obs) {
            nn::forward(params, ob, cache);
            actions[id] = static_cast<AvAction>(nn::sample_action(cache.out.probs, runner.action_rng));
            values[id] = cache.out.value;
        }
        auto [next, res] = env_step(runner.world, actions, config.env);

        for (const auto& [id, action] : actions) {
            auto it = runner.open.find(id);
            if (it == runner.open.end()) {
                buffer.trajectories.push_back({runner.episode_index, id, {}, 0.0});
                it = runner.open.emplace(id, buffer.trajectories.size() - 1).first;
            }
            const auto reward_it = res.rewards.find(id);
            const bool alive = reward_it != res.rewards.end();
            const double reward = alive ? reward_it->second : 0.0;
            const bool done = res.done || !alive;
            buffer.trajectories[it->second].steps.push_back(
                {runner.obs.at(id), static_cast<int>(action), reward, values.at(id), done, runner.world.step_count});
            runner.returns[id] += reward;
            if (done) runner.open.erase(it);
        }
        record_step(runner.current, res);
        ++stats.steps;

        if (res.done) {
            runner.current.ret = mean_return(runner.returns, runner.agents_at_reset);
            stats.finished.push_back(std::move(runner.current));
            ++runner.episode_index;
            runner.reset(config);
        } else {
            runner.world = std::move(next);
            runner.obs = std::move(res.observations);
        }
    }
    for (const auto& [id, index] : runner.open) {
        buffer.trajectories[index].bootstrap = nn::forward(params, runner.obs.at(id)).value;
    }
    runner.open.clear();
    return stats;
}

std::vector<nn::Sample> build_batch(const RolloutBuffer& buffer, const Hyperparams& hp) {
    std::vector<double> all_returns, all_values;
    for (const Trajectory& traj : buffer.trajectories) {
        std::vector<double> rewards;
        std::vector<std::uint8_t> dones;
        for (const Transition& tr : traj.steps) {
            rewards.push_back(tr.reward / hp.reward_scale);
            dones.push_back(tr.done ? 1 : 0);
            all_values.push_back(tr.value);
        }
        const auto r = compute_returns(rewards, dones, traj.bootstrap, hp.gamma);
        all_returns.insert(all_returns.end(), r.begin(), r.end());
    }
    const auto adv = compute_advantages(all_returns, all_values, hp.normalize_advantages);

    std::vector<nn::Sample> batch;
    batch.reserve(adv.size());
    std::size_t k = 0;
    for (const Trajectory& traj : buffer.trajectories) {
        for (const Transition& tr : traj.steps) {
            batch.push_back({tr.obs, tr.action, adv[k], all_returns[k]});
            ++k;
        }
    }
    return batch;
}

UpdateStats update(nn::NetworkParams& params, nn::AdamState& adam, RolloutBuffer& buffer, const Hyperparams& hp,
                   const nn::AdamConfig& adam_config) {
    if (buffer.empty()) throw ContractError("update called with an empty rollout buffer");
    const auto batch = build_batch(buffer, hp);
    const nn::Gradient g = nn::backward(params, batch, {hp.value_coef, hp.entropy_coef}, hp.threads);

    const nn::NetworkParams before = params;
    const nn::AdamState adam_before = adam;
    UpdateStats stats;
    stats.grad_norm = nn::apply_update(params, g.grad, adam, hp.eta, adam_config);
    if (!params.all_finite()) {
        params = before;
        adam = adam_before;
        throw TrainingFault("parameters became non-finite; update discarded");
    }
    stats.loss = g.loss;
    stats.policy_loss = g.policy_loss;
    stats.value_loss = g.value_loss;
    stats.entropy = g.entropy;
    stats.batch = batch.size();
    buffer.clear();
    return stats;
}

Policy greedy_policy(const nn::NetworkParams& params) {
    return [&params](const Observation& obs, Rng&) { return nn::greedy_action(nn::forward(params, obs).probs); };
}

Policy random_policy() {
    return [](const Observation&, Rng& rng) { return static_cast<int>(rng.uniform_int(0, kNumActions - 1)); };
}

Policy idle_policy() {
    return [](const Observation&, Rng&) { return static_cast<int>(AvAction::Idle); };
}

EpisodeRecord run_episode(const Policy& policy, const EnvConfig& env, DensityMode density, std::uint64_t seed,
                          Rng& policy_rng, int max_steps, const StepObserver& observer) {
    auto [world, obs] = env_reset(density, seed, env);
    std::map<VehicleId, double> returns;
    const std::size_t agents = obs.size();
    EpisodeRecord rec;
    while (true) {
        std::map<VehicleId, AvAction> actions;
        for (const auto& [id, ob] : obs) actions[id] = static_cast<AvAction>(policy(ob, policy_rng));
        auto [next, res] = env_step(world, actions, env);
        for (const auto& [id, r] : res.rewards) returns[id] += r;
        record_step(rec, res);
        if (observer) observer(next, actions, res);
        if (res.done || (max_steps > 0 && rec.length >= max_steps)) break;
        world = std::move(next);
        obs = std::move(res.observations);
    }
    rec.ret = mean_return(returns, agents);
    return rec;
}

EvalMetrics evaluate(const Policy& policy, const EnvConfig& env, DensityMode density, int episodes,
                     std::uint64_t seed) {
    if (episodes < 1) throw ContractError("evaluation needs at least one episode");
    Rng policy_rng(mix_seed(seed, 0xC0FFEE));
    EvalMetrics m;
    m.episodes = episodes;
    std::vector<double> rets;
    double speed_sum = 0.0, accel_sum = 0.0, accel_sq = 0.0;
    std::size_t speed_n = 0, accel_n = 0;
    int collisions = 0, lane_changes = 0;
    for (int e = 0; e < episodes; ++e) {
        const EpisodeRecord rec =
            run_episode(policy, env, density, episode_seed(seed, static_cast<std::uint64_t>(e)), policy_rng);
        rets.push_back(rec.ret);
        collisions += rec.collision ? 1 : 0;
        lane_changes += rec.lane_changes;
        for (double v : rec.speeds) speed_sum += v;
        speed_n += rec.speeds.size();
        for (double a : rec.accelerations) {
            accel_sum += a;
            accel_sq += a * a;
        }
        accel_n += rec.accelerations.size();
    }
    const double n = static_cast<double>(episodes);
    m.return_mean = std::accumulate(rets.begin(), rets.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rets) var += (r - m.return_mean) * (r - m.return_mean);
    m.return_std = std::sqrt(var / n);
    m.collision_rate = collisions / n;
    m.mean_speed = speed_n ? speed_sum / static_cast<double>(speed_n) : 0.0;
    if (accel_n) {
        const double mean_a = accel_sum / static_cast<double>(accel_n);
        m.accel_std = std::sqrt(std::max(0.0, accel_sq / static_cast<double>(accel_n) - mean_a * mean_a));
    }
    m.lane_changes_per_episode = lane_changes / n;
    return m;
}

EvalMetrics evaluate(const nn::NetworkParams& params, const EnvConfig& env, DensityMode density, int episodes,
                     std::uint64_t seed) {
    return evaluate(greedy_policy(params), env, density, episodes, seed);
}

std::uint64_t eval_seed_for(std::uint64_t train_seed) { return mix_seed(train_seed, 0xE7A1); }

TrainResult train(const TrainConfig& config, const TrainState& start,
                  const std::function<void(const MetricsRow&)>& on_eval) {
    config.env.validate();
    config.hp.validate();
    const Hyperparams& hp = config.hp;
    if (config.arch.n_obs != config.env.n_obs) throw ContractError("network n_obs differs from environment n_obs");

    Rng init_rng(mix_seed(hp.seed, 0xA11CE));
    nn::NetworkParams params = start.params ? *start.params : nn::NetworkParams::initialized(config.arch, init_rng);
    if (!(params.architecture() == config.arch)) {
        throw ContractError(std::string("resume checkpoint uses a ") + nn::to_string(params.architecture().trunk) +
                            " trunk / different dimensions than the configured " + nn::to_string(config.arch.trunk) +
                            " network");
    }

    TrainResult result{params, params, -std::numeric_limits<double>::infinity(), {}, start.step, start.episode};
    if (hp.total_steps == 0) return result;

    std::vector<EnvRunner> runners;
    for (int k = 0; k < hp.n_envs; ++k) {
        runners.emplace_back(config, mix_seed(hp.seed, 1000 + static_cast<std::uint64_t>(k) +
                                                           static_cast<std::uint64_t>(start.episode) * 7919));
    }
    std::vector<RolloutBuffer> buffers(runners.size());
    std::vector<RolloutStats> stats(runners.size());

    nn::AdamState adam;
    const std::uint64_t eval_seed = eval_seed_for(hp.seed);
    const std::int64_t target = start.step + hp.total_steps;
    std::int64_t next_eval = (start.episode / hp.eval_every + 1) * hp.eval_every;
    const auto t0 = std::chrono::steady_clock::now();

    auto run_eval = [&] {
        const EvalMetrics m = evaluate(params, config.env, config.density, hp.eval_episodes, eval_seed);
        MetricsRow row{result.steps,   result.episodes, m.return_mean, m.return_std,
                       m.collision_rate, m.mean_speed, m.accel_std,    m.lane_changes_per_episode,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
        result.log.push_back(row);
        if (row.eval_return_mean > result.best_return) {
            result.best_return = row.eval_return_mean;
            result.best_params = params;
        }
        if (on_eval) on_eval(row);
    };

    while (result.steps < target) {
        const std::int64_t remaining = target - result.steps;
        const auto n_envs = static_cast<std::int64_t>(runners.size());
        const int len = static_cast<int>(std::min<std::int64_t>(hp.rollout_len, (remaining + n_envs - 1) / n_envs));

#pragma omp parallel for schedule(static) num_threads(std::max(1, hp.threads)) if (hp.threads > 1)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(runners.size()); ++k) {
            const auto i = static_cast<std::size_t>(k);
            stats[i] = collect_rollout(runners[i], params, buffers[i], len, config);
        }

        RolloutBuffer pooled;
        for (std::size_t i = 0; i < runners.size(); ++i) {
            result.steps += stats[i].steps;
            result.episodes += static_cast<std::int64_t>(stats[i].finished.size());
            for (auto& traj : buffers[i].trajectories) pooled.trajectories.push_back(std::move(traj));
            buffers[i].clear();
        }
        update(params, adam, pooled, hp, config.adam);

        if (result.episodes >= next_eval) {
            run_eval();
            next_eval = (result.episodes / hp.eval_every + 1) * hp.eval_every;
        }
    }
    if (result.log.empty() || result.log.back().step != result.steps) run_eval();
    result.final_params = params;
    return result;
}

}  // namespace hwy
