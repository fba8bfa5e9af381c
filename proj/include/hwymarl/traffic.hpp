#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hwymarl/rng.hpp"

namespace hwy {

using VehicleId = int;

enum class VehicleKind { AV, HDV };
enum class LaneDecision { Keep, Left, Right };
enum class DensityMode { D1, D2, D3 };

const char* to_string(VehicleKind kind);
const char* to_string(DensityMode mode);
DensityMode parse_density(const std::string& text);

// Inclusive AV / HDV count ranges per density mode.
struct DensityRange {
    int av_min, av_max, hdv_min, hdv_max;
};
DensityRange density_range(DensityMode mode);

struct RoadConfig {
    double length = 520.0;
    int lane_count = 2;
    double lane_width = 4.0;
    double speed_min = 20.0;
    double speed_max = 30.0;

    void validate() const;
    // Lane 0 is the leftmost lane and its center sits at y = 0.
    double lane_center(int lane) const { return lane * lane_width; }
    bool valid_lane(int lane) const { return lane >= 0 && lane < lane_count; }
    bool operator==(const RoadConfig&) const = default;
};

struct SpawnConfig {
    double min_gap = 15.0;         // bumper-to-bumper, same lane
    double spawn_extent = 300.0;   // vehicles are placed in [0, spawn_extent]
    double init_speed_min = 25.0;
    double init_speed_max = 30.0;
    double hdv_desired_min = 25.0;
    double hdv_desired_max = 30.0;
    double vehicle_length = 5.0;
    double vehicle_width = 2.0;
};

struct TrafficConfig {
    RoadConfig road;
    SpawnConfig spawn;
    double dt = 0.2;
    double lane_change_duration = 1.0;
};

struct VehicleState {
    VehicleId id = 0;
    VehicleKind kind = VehicleKind::HDV;
    int lane = 0;
    int target_lane = 0;
    int source_lane = 0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;
    double a = 0.0;
    double lane_change_progress = 1.0;
    int lane_change_step = 0;
    double length = 5.0;
    double width = 2.0;
    // IDM v0 for HDVs, cruise target for AVs.
    double desired_speed = 30.0;

    bool changing_lane() const { return lane_change_progress < 1.0; }
    // True when the vehicle physically uses `l` (its lane or the lane it is moving into).
    bool occupies(int l) const { return lane == l || (changing_lane() && target_lane == l); }

    bool operator==(const VehicleState&) const = default;
};

struct WorldState {
    std::int64_t step_count = 0;
    double dt = 0.2;
    int lane_change_steps = 5;
    RoadConfig road;
    std::vector<VehicleState> vehicles;  // sorted by id
    Rng rng;

    const VehicleState& vehicle(VehicleId id) const;
    const VehicleState* find(VehicleId id) const;
    double lateral_speed(const VehicleState& v) const;

    bool operator==(const WorldState&) const = default;
};

struct Command {
    double acceleration = 0.0;
    LaneDecision decision = LaneDecision::Keep;
};
using CommandMap = std::map<VehicleId, Command>;

struct LeaderInfo {
    VehicleId id;
    double gap;          // bumper-to-bumper
    double speed_delta;  // v_ego - v_leader
};

WorldState spawn_world(DensityMode mode, std::uint64_t seed, const TrafficConfig& config = {});

// One semi-implicit Euler step. Throws ContractError if a vehicle lacks a command.
WorldState advance(WorldState world, const CommandMap& commands);

std::vector<std::pair<VehicleId, VehicleId>> detect_collisions(const WorldState& world);

std::vector<VehicleId> neighbors(const WorldState& world, VehicleId id, double radius);

std::optional<LeaderInfo> leader(const WorldState& world, VehicleId id, int lane);
// Nearest vehicle strictly behind `id` occupying `lane`; gap/speed_delta seen from that follower.
std::optional<LeaderInfo> follower(const WorldState& world, VehicleId id, int lane);

double bumper_gap(const VehicleState& rear, const VehicleState& front);

}  // namespace hwy
