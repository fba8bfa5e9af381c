#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hwymarl/hdv.hpp"
#include "hwymarl/traffic.hpp"

namespace hwy {

enum class AvAction { Slower = 0, Idle = 1, Faster = 2, LaneLeft = 3, LaneRight = 4 };
inline constexpr int kNumActions = 5;
inline constexpr int kNumFeatures = 4;

const char* to_string(AvAction action);

struct RewardConfig {
    double w_s = 200.0;
    double w_d = 4.0;
    double w_v = 1.0;
    double w_c = 1.0;
    double t_d = 1.2;     // time-headway threshold, s
    double a_th = 3.0;    // comfort acceleration threshold
    double v_min = 20.0;
    double v_max = 30.0;
    double neighbor_radius = 60.0;

    void validate() const;
};

struct EnvConfig {
    TrafficConfig traffic;
    RewardConfig reward;
    IdmParams idm;
    MobilParams mobil;
    int n_obs = 5;
    double obs_range = 100.0;
    int horizon = 100;
    double speed_step = 2.5;   // FASTER / SLOWER target change
    double speed_gain = 2.0;   // proportional speed tracking, 1/s
    double accel_min = -5.0;
    double accel_max = 3.0;

    void validate() const;
};

// Fixed n_obs x 4 matrix, row-major. Row 0 describes the ego in absolute
// normalized terms; the remaining rows hold neighbors relative to the ego.
struct Observation {
    int rows = 0;
    std::vector<double> data;

    Observation() = default;
    explicit Observation(int n_rows) : rows(n_rows), data(static_cast<std::size_t>(n_rows) * kNumFeatures, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r * kNumFeatures + c)]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r * kNumFeatures + c)]; }
    std::span<const double> values() const { return data; }

    bool operator==(const Observation&) const = default;
};

struct RewardComponents {
    double safety = 0.0;   // r_s in {0, -1}
    double headway = 0.0;  // r_d in [-2, 2]
    double speed = 0.0;    // r_v in [-1, 1]
    double comfort = 0.0;  // r_c in {0, -1, -2}
};

struct StepInfo {
    std::vector<std::pair<VehicleId, VehicleId>> collisions;
    std::map<VehicleId, double> speeds;
    std::map<VehicleId, double> accelerations;
    std::map<VehicleId, bool> lane_changes;
    std::map<VehicleId, RewardComponents> components;
    std::map<VehicleId, LaneDecision> hdv_decisions;
    std::vector<VehicleId> exited;  // AVs that left the road this step
    bool av_collision = false;
};

struct StepResult {
    std::map<VehicleId, Observation> observations;
    std::map<VehicleId, double> rewards;      // local (neighborhood-averaged)
    std::map<VehicleId, double> raw_rewards;  // per-agent weighted sum
    bool done = false;
    StepInfo info;
};

std::vector<VehicleId> live_agents(const WorldState& world);

Observation build_observation(const WorldState& world, VehicleId agent, int n_obs, double obs_range);

double reward_safety(const std::vector<std::pair<VehicleId, VehicleId>>& collisions, VehicleId agent);
double reward_safety(const WorldState& world, VehicleId agent);
double reward_headway(double v, std::optional<double> d_headway, const RewardConfig& config);
double reward_speed(double v, const RewardConfig& config);
double reward_comfort(double a, bool changed_lane, const RewardConfig& config);
double agent_reward(const RewardComponents& c, const RewardConfig& config);
double local_reward(VehicleId agent, const std::map<VehicleId, double>& raw_rewards, const WorldState& world,
                    double radius);

// Maps a discrete AV action to a low-level command; updates the AV's cruise
// target in place. Returns the command and whether a lane change starts.
std::pair<Command, bool> av_command(VehicleState& av, AvAction action, const WorldState& world,
                                    const EnvConfig& config);

std::pair<WorldState, StepResult> env_step(const WorldState& world, const std::map<VehicleId, AvAction>& actions,
                                           const EnvConfig& config);

std::pair<WorldState, std::map<VehicleId, Observation>> env_reset(DensityMode mode, std::uint64_t seed,
                                                                  const EnvConfig& config);

}  // namespace hwy
