#include <ostream>

#include <json.hpp>

#include "hwymarl/harness.hpp"

namespace hwy::harness {

namespace {

const char* decision_name(LaneDecision d) {
    switch (d) {
        case LaneDecision::Keep: return "KEEP";
        case LaneDecision::Left: return "LEFT";
        case LaneDecision::Right: return "RIGHT";
    }
    return "?";
}

}  // namespace

int write_trace(const Policy& policy, const EnvConfig& env, DensityMode density, std::uint64_t seed, int steps,
                std::ostream& out) {
    Rng policy_rng(mix_seed(seed, 0xC0FFEE));
    int written = 0;
    auto observer = [&](const WorldState& world, const std::map<VehicleId, AvAction>& actions, const StepResult& res) {
        nlohmann::json rec;
        rec["type"] = "step";
        rec["step"] = world.step_count;
        rec["time"] = static_cast<double>(world.step_count) * world.dt;
        rec["done"] = res.done;
        nlohmann::json collisions = nlohmann::json::array();
        for (const auto& [a, b] : res.info.collisions) collisions.push_back({a, b});
        rec["collisions"] = collisions;
        nlohmann::json vehicles = nlohmann::json::array();
        for (const VehicleState& v : world.vehicles) {
            nlohmann::json j;
            j["id"] = v.id;
            j["kind"] = to_string(v.kind);
            j["lane"] = v.lane;
            j["target_lane"] = v.target_lane;
            j["x"] = v.x;
            j["y"] = v.y;
            j["v"] = v.v;
            j["a"] = v.a;
            if (v.kind == VehicleKind::AV) {
                j["action"] = to_string(actions.at(v.id));
            } else {
                auto it = res.info.hdv_decisions.find(v.id);
                j["action"] = it != res.info.hdv_decisions.end() ? decision_name(it->second) : "KEEP";
            }
            vehicles.push_back(std::move(j));
        }
        rec["vehicles"] = std::move(vehicles);
        out << rec.dump() << '\n';
        ++written;
    };
    run_episode(policy, env, density, episode_seed(seed, 0), policy_rng, steps, observer);
    return written;
}

}  // namespace hwy::harness
