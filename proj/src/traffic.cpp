#include "hwymarl/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hwymarl/errors.hpp"

namespace hwy {

const char* to_string(VehicleKind kind) { return kind == VehicleKind::AV ? "AV" : "HDV"; }

const char* to_string(DensityMode mode) {
    switch (mode) {
        case DensityMode::D1: return "D1";
        case DensityMode::D2: return "D2";
        case DensityMode::D3: return "D3";
    }
    return "?";
}

DensityMode parse_density(const std::string& text) {
    if (text == "D1" || text == "1") return DensityMode::D1;
    if (text == "D2" || text == "2") return DensityMode::D2;
    if (text == "D3" || text == "3") return DensityMode::D3;
    throw ContractError("unknown density mode '" + text + "' (expected D1, D2 or D3)");
}

DensityRange density_range(DensityMode mode) {
    switch (mode) {
        case DensityMode::D1: return {1, 3, 1, 3};
        case DensityMode::D2: return {2, 4, 2, 4};
        case DensityMode::D3: return {4, 6, 4, 6};
    }
    throw ContractError("invalid density mode");
}

void RoadConfig::validate() const {
    if (!(length > 0.0)) throw ContractError("road length must be positive");
    if (lane_count < 2) throw ContractError("road needs at least two lanes");
    if (!(lane_width > 0.0)) throw ContractError("lane width must be positive");
    if (!(speed_min < speed_max)) throw ContractError("speed_min must be below speed_max");
}

const VehicleState* WorldState::find(VehicleId id) const {
    auto it = std::lower_bound(vehicles.begin(), vehicles.end(), id,
                               [](const VehicleState& v, VehicleId key) { return v.id < key; });
    if (it == vehicles.end() || it->id != id) return nullptr;
    return &*it;
}

const VehicleState& WorldState::vehicle(VehicleId id) const {
    const VehicleState* v = find(id);
    if (!v) throw LookupError("no vehicle with id " + std::to_string(id));
    return *v;
}

double WorldState::lateral_speed(const VehicleState& v) const {
    if (!v.changing_lane()) return 0.0;
    const double duration = lane_change_steps * dt;
    return (road.lane_center(v.target_lane) - road.lane_center(v.source_lane)) / duration;
}

WorldState spawn_world(DensityMode mode, std::uint64_t seed, const TrafficConfig& config) {
    config.road.validate();
    const SpawnConfig& sc = config.spawn;

    WorldState world;
    world.dt = config.dt;
    world.road = config.road;
    world.lane_change_steps = std::max(1, static_cast<int>(std::lround(config.lane_change_duration / config.dt)));
    world.rng = Rng(seed);
    Rng& rng = world.rng;

    const DensityRange range = density_range(mode);
    const int n_av = static_cast<int>(rng.uniform_int(range.av_min, range.av_max));
    const int n_hdv = static_cast<int>(rng.uniform_int(range.hdv_min, range.hdv_max));

    std::vector<VehicleKind> kinds(n_av, VehicleKind::AV);
    kinds.insert(kinds.end(), n_hdv, VehicleKind::HDV);
    for (std::size_t i = kinds.size(); i > 1; --i) {
        std::swap(kinds[i - 1], kinds[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }

    std::vector<std::vector<std::size_t>> by_lane(config.road.lane_count);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        by_lane[static_cast<std::size_t>(rng.uniform_int(0, config.road.lane_count - 1))].push_back(i);
    }

    const double extent = std::min(sc.spawn_extent, config.road.length);
    const double pitch = sc.vehicle_length + sc.min_gap;
    std::vector<double> xs(kinds.size());
    std::vector<int> lanes(kinds.size());
    for (int lane = 0; lane < config.road.lane_count; ++lane) {
        const auto& members = by_lane[static_cast<std::size_t>(lane)];
        if (members.empty()) continue;
        const double slack = extent - pitch * static_cast<double>(members.size() - 1);
        if (slack < 0.0) {
            throw SpawnError("cannot place " + std::to_string(members.size()) + " vehicles in lane " +
                             std::to_string(lane) + " within " + std::to_string(extent) + " m at gap " +
                             std::to_string(sc.min_gap) + " m");
        }
        // Sorted uniform offsets plus a fixed pitch keep every gap >= min_gap.
        std::vector<double> offsets(members.size());
        for (double& o : offsets) o = rng.uniform(0.0, slack);
        std::sort(offsets.begin(), offsets.end());
        for (std::size_t k = 0; k < members.size(); ++k) {
            xs[members[k]] = offsets[k] + pitch * static_cast<double>(k);
            lanes[members[k]] = lane;
        }
    }

    world.vehicles.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        VehicleState v;
        v.id = static_cast<VehicleId>(i);
        v.kind = kinds[i];
        v.lane = v.target_lane = v.source_lane = lanes[i];
        v.x = xs[i];
        v.y = config.road.lane_center(lanes[i]);
        v.v = rng.uniform(sc.init_speed_min, sc.init_speed_max);
        v.length = sc.vehicle_length;
        v.width = sc.vehicle_width;
        v.desired_speed = v.kind == VehicleKind::HDV ? rng.uniform(sc.hdv_desired_min, sc.hdv_desired_max) : v.v;
        world.vehicles.push_back(v);
    }
    return world;
}

WorldState advance(WorldState world, const CommandMap& commands) {
    const RoadConfig& road = world.road;
    for (VehicleState& veh : world.vehicles) {
        auto it = commands.find(veh.id);
        if (it == commands.end()) throw ContractError("no command for vehicle " + std::to_string(veh.id));
        const Command& cmd = it->second;

        veh.a = cmd.acceleration;
        veh.v = std::max(0.0, veh.v + cmd.acceleration * world.dt);
        veh.x += veh.v * world.dt;

        if (!veh.changing_lane() && cmd.decision != LaneDecision::Keep) {
            const int target = veh.lane + (cmd.decision == LaneDecision::Left ? -1 : 1);
            if (road.valid_lane(target)) {
                veh.source_lane = veh.lane;
                veh.target_lane = target;
                veh.lane_change_step = 0;
                veh.lane_change_progress = 0.0;
            }
        }
        if (veh.changing_lane()) {
            ++veh.lane_change_step;
            if (veh.lane_change_step >= world.lane_change_steps) {
                veh.lane_change_progress = 1.0;
                veh.lane = veh.target_lane;
                veh.source_lane = veh.target_lane;
                veh.y = road.lane_center(veh.target_lane);
            } else {
                veh.lane_change_progress =
                    static_cast<double>(veh.lane_change_step) / static_cast<double>(world.lane_change_steps);
                const double from = road.lane_center(veh.source_lane);
                veh.y = from + (road.lane_center(veh.target_lane) - from) * veh.lane_change_progress;
                veh.lane = veh.lane_change_progress >= 0.5 ? veh.target_lane : veh.source_lane;
            }
        }
    }
    std::erase_if(world.vehicles, [&](const VehicleState& v) { return v.x > road.length; });
    ++world.step_count;
    return world;
}

std::vector<std::pair<VehicleId, VehicleId>> detect_collisions(const WorldState& world) {
    std::vector<std::pair<VehicleId, VehicleId>> pairs;
    const auto& vs = world.vehicles;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            const double dx = std::abs(vs[i].x - vs[j].x);
            const double dy = std::abs(vs[i].y - vs[j].y);
            if (dx < 0.5 * (vs[i].length + vs[j].length) && dy < 0.5 * (vs[i].width + vs[j].width)) {
                pairs.emplace_back(vs[i].id, vs[j].id);
            }
        }
    }
    return pairs;
}

std::vector<VehicleId> neighbors(const WorldState& world, VehicleId id, double radius) {
    const VehicleState& ego = world.vehicle(id);
    std::vector<std::pair<double, VehicleId>> found;
    if (radius > 0.0) {
        for (const VehicleState& other : world.vehicles) {
            if (other.id == id) continue;
            const double d = std::abs(other.x - ego.x);
            if (d <= radius) found.emplace_back(d, other.id);
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<VehicleId> out;
    out.reserve(found.size());
    for (const auto& [d, vid] : found) out.push_back(vid);
    return out;
}

double bumper_gap(const VehicleState& rear, const VehicleState& front) {
    return (front.x - rear.x) - 0.5 * (front.length + rear.length);
}

std::optional<LeaderInfo> leader(const WorldState& world, VehicleId id, int lane) {
    const VehicleState& ego = world.vehicle(id);
    const VehicleState* best = nullptr;
    for (const VehicleState& other : world.vehicles) {
        if (other.id == id || !other.occupies(lane) || !(other.x > ego.x)) continue;
        if (!best || other.x < best->x) best = &other;
    }
    if (!best) return std::nullopt;
    return LeaderInfo{best->id, bumper_gap(ego, *best), ego.v - best->v};
}

std::optional<LeaderInfo> follower(const WorldState& world, VehicleId id, int lane) {
    const VehicleState& ego = world.vehicle(id);
    const VehicleState* best = nullptr;
    for (const VehicleState& other : world.vehicles) {
        if (other.id == id || !other.occupies(lane) || !(other.x < ego.x)) continue;
        if (!best || other.x > best->x) best = &other;
    }
    if (!best) return std::nullopt;
    return LeaderInfo{best->id, bumper_gap(*best, ego), best->v - ego.v};
}

}  // namespace hwy
