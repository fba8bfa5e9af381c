#include "hwymarl/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hwymarl/errors.hpp"

namespace hwy {

const char* to_string(AvAction action) {
    switch (action) {
        case AvAction::Slower: return "SLOWER";
        case AvAction::Idle: return "IDLE";
        case AvAction::Faster: return "FASTER";
        case AvAction::LaneLeft: return "LANE_LEFT";
        case AvAction::LaneRight: return "LANE_RIGHT";
    }
    return "?";
}

void RewardConfig::validate() const {
    if (w_s < 0 || w_d < 0 || w_v < 0 || w_c < 0) throw ContractError("reward weights must be non-negative");
    if (!(t_d > 0)) throw ContractError("t_d must be positive");
    if (!(v_min < v_max)) throw ContractError("v_min must be below v_max");
}

void EnvConfig::validate() const {
    traffic.road.validate();
    reward.validate();
    idm.validate();
    mobil.validate();
    if (n_obs < 1) throw ContractError("n_obs must be at least 1");
    if (!(obs_range > 0)) throw ContractError("obs_range must be positive");
    if (horizon < 1) throw ContractError("horizon must be at least 1");
}

std::vector<VehicleId> live_agents(const WorldState& world) {
    std::vector<VehicleId> ids;
    for (const VehicleState& v : world.vehicles) {
        if (v.kind == VehicleKind::AV) ids.push_back(v.id);
    }
    return ids;
}

Observation build_observation(const WorldState& world, VehicleId agent, int n_obs, double obs_range) {
    const VehicleState* ego = world.find(agent);
    if (!ego || ego->kind != VehicleKind::AV) throw LookupError("no live agent with id " + std::to_string(agent));
    const RoadConfig& road = world.road;
    const double y_scale = road.lane_count * road.lane_width;
    const double vy_ego = world.lateral_speed(*ego);

    Observation obs(n_obs);
    auto put = [&](int row, double fx, double fy, double fvx, double fvy) {
        obs.at(row, 0) = std::clamp(fx, -1.0, 1.0);
        obs.at(row, 1) = std::clamp(fy, -1.0, 1.0);
        obs.at(row, 2) = std::clamp(fvx, -1.0, 1.0);
        obs.at(row, 3) = std::clamp(fvy, -1.0, 1.0);
    };
    put(0, ego->x / road.length, ego->y / y_scale, ego->v / road.speed_max, vy_ego / road.speed_max);

    const auto nearby = neighbors(world, agent, obs_range);
    const int filled = std::min<int>(n_obs - 1, static_cast<int>(nearby.size()));
    for (int k = 0; k < filled; ++k) {
        const VehicleState& o = world.vehicle(nearby[static_cast<std::size_t>(k)]);
        put(k + 1, (o.x - ego->x) / obs_range, (o.y - ego->y) / y_scale, (o.v - ego->v) / road.speed_max,
            (world.lateral_speed(o) - vy_ego) / road.speed_max);
    }
    return obs;
}

double reward_safety(const std::vector<std::pair<VehicleId, VehicleId>>& collisions, VehicleId agent) {
    for (const auto& [a, b] : collisions) {
        if (a == agent || b == agent) return -1.0;
    }
    return 0.0;
}

double reward_safety(const WorldState& world, VehicleId agent) { return reward_safety(detect_collisions(world), agent); }

double reward_headway(double v, std::optional<double> d_headway, const RewardConfig& config) {
    if (!d_headway) return 0.0;
    if (*d_headway <= 0.0) return -2.0;
    if (v <= 0.0) return 2.0;
    return std::clamp(std::log(*d_headway / (v * config.t_d)), -2.0, 2.0);
}

double reward_speed(double v, const RewardConfig& config) {
    return std::max(-1.0, std::min((v - config.v_min) / (config.v_max - config.v_min), 1.0));
}

double reward_comfort(double a, bool changed_lane, const RewardConfig& config) {
    double r = 0.0;
    if (std::abs(a) >= config.a_th) r -= 1.0;
    if (changed_lane) r -= 1.0;
    return r;
}

double agent_reward(const RewardComponents& c, const RewardConfig& config) {
    // Comfort is a penalty whatever sign convention the component carries.
    return config.w_s * c.safety + config.w_d * c.headway + config.w_v * c.speed - config.w_c * std::abs(c.comfort);
}

double local_reward(VehicleId agent, const std::map<VehicleId, double>& raw_rewards, const WorldState& world,
                    double radius) {
    if (!raw_rewards.count(agent)) throw LookupError("no raw reward for agent " + std::to_string(agent));
    std::vector<VehicleId> members{agent};
    for (VehicleId other : neighbors(world, agent, radius)) {
        if (raw_rewards.count(other)) members.push_back(other);
    }
    // Sum in id order so identical neighborhoods give bit-identical means.
    std::sort(members.begin(), members.end());
    double sum = 0.0;
    for (VehicleId id : members) sum += raw_rewards.at(id);
    return sum / static_cast<double>(members.size());
}

std::pair<Command, bool> av_command(VehicleState& av, AvAction action, const WorldState& world,
                                    const EnvConfig& config) {
    const RewardConfig& rc = config.reward;
    Command cmd;
    bool lane_change = false;
    switch (action) {
        case AvAction::Faster: av.desired_speed = std::clamp(av.desired_speed + config.speed_step, rc.v_min, rc.v_max); break;
        case AvAction::Slower: av.desired_speed = std::clamp(av.desired_speed - config.speed_step, rc.v_min, rc.v_max); break;
        case AvAction::Idle: break;
        case AvAction::LaneLeft:
        case AvAction::LaneRight: {
            const int target = av.lane + (action == AvAction::LaneLeft ? -1 : 1);
            if (!av.changing_lane() && world.road.valid_lane(target)) {
                cmd.decision = action == AvAction::LaneLeft ? LaneDecision::Left : LaneDecision::Right;
                lane_change = true;
            }
            break;
        }
    }
    cmd.acceleration = std::clamp(config.speed_gain * (av.desired_speed - av.v), config.accel_min, config.accel_max);
    return {cmd, lane_change};
}

std::pair<WorldState, StepResult> env_step(const WorldState& world, const std::map<VehicleId, AvAction>& actions,
                                           const EnvConfig& config) {
    const auto agents = live_agents(world);
    if (actions.size() != agents.size() ||
        !std::all_of(agents.begin(), agents.end(), [&](VehicleId id) { return actions.count(id) == 1; })) {
        throw ContractError("action keys must match the live AVs exactly (" + std::to_string(agents.size()) +
                            " agents, " + std::to_string(actions.size()) + " actions)");
    }

    WorldState next = world;
    CommandMap commands;
    std::map<VehicleId, bool> started;
    for (VehicleState& v : next.vehicles) {
        if (v.kind == VehicleKind::AV) {
            auto [cmd, lc] = av_command(v, actions.at(v.id), world, config);
            commands[v.id] = cmd;
            started[v.id] = lc;
        } else {
            // HDVs decide on the pre-step snapshot.
            commands[v.id] = hdv_decide(world, v.id, config.idm, config.mobil);
        }
    }
    next = advance(std::move(next), commands);

    StepResult result;
    StepInfo& info = result.info;
    for (const auto& [id, cmd] : commands) {
        if (world.vehicle(id).kind == VehicleKind::HDV) info.hdv_decisions[id] = cmd.decision;
    }
    info.collisions = detect_collisions(next);
    bool any_collision = !info.collisions.empty();

    const auto survivors = live_agents(next);
    for (VehicleId id : agents) {
        if (!next.find(id)) info.exited.push_back(id);
    }

    const RewardConfig& rc = config.reward;
    for (VehicleId id : survivors) {
        const VehicleState& av = next.vehicle(id);
        RewardComponents c;
        c.safety = reward_safety(info.collisions, id);
        const auto lead = leader(next, id, av.lane);
        c.headway = reward_headway(av.v, lead ? std::optional<double>(lead->gap) : std::nullopt, rc);
        c.speed = reward_speed(av.v, rc);
        c.comfort = reward_comfort(commands.at(id).acceleration, started.at(id), rc);
        if (c.safety < 0.0) info.av_collision = true;

        info.components[id] = c;
        info.speeds[id] = av.v;
        info.accelerations[id] = commands.at(id).acceleration;
        info.lane_changes[id] = started.at(id);
        result.raw_rewards[id] = agent_reward(c, rc);
    }
    for (VehicleId id : survivors) {
        result.rewards[id] = local_reward(id, result.raw_rewards, next, rc.neighbor_radius);
        result.observations[id] = build_observation(next, id, config.n_obs, config.obs_range);
    }

    const bool all_exited = !agents.empty() && survivors.empty();
    result.done = any_collision || all_exited || next.step_count >= config.horizon;
    return {std::move(next), std::move(result)};
}

std::pair<WorldState, std::map<VehicleId, Observation>> env_reset(DensityMode mode, std::uint64_t seed,
                                                                  const EnvConfig& config) {
    config.validate();
    WorldState world = spawn_world(mode, seed, config.traffic);
    std::map<VehicleId, Observation> obs;
    for (VehicleId id : live_agents(world)) obs[id] = build_observation(world, id, config.n_obs, config.obs_range);
    return {std::move(world), std::move(obs)};
}

}  // namespace hwy
